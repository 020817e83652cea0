#pragma once

// Time integration of the wide and the switched systems.
//
// The switched field is integrated piece by piece: every constant piece
// [boundary(k), boundary(k+1)) is an autonomous ODE, so no step ever straddles
// a switch and every switch time is a stored node.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "narrow_node/model.hpp"

namespace narrow_node {

enum class Method { fixed_rk4, adaptive_reference };

struct IntegratorConfig {
  Method method = Method::adaptive_reference;
  double step_h = 1e-2;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  std::size_t max_steps = 10'000'000;

  static IntegratorConfig adaptive(double tol = 1e-10) {
    IntegratorConfig cfg;
    cfg.abs_tol = tol;
    cfg.rel_tol = tol;
    return cfg;
  }

  static IntegratorConfig fixed(double step) {
    IntegratorConfig cfg;
    cfg.method = Method::fixed_rk4;
    cfg.step_h = step;
    return cfg;
  }

  /// Sixteen RK4 steps per constant piece of the schedule.
  static IntegratorConfig fixed_for(const SwitchSchedule& schedule) {
    return fixed(schedule.horizon() / (static_cast<double>(schedule.segments()) * 16.0));
  }

  void validate() const {
    if (!(step_h > 0.0) || !std::isfinite(step_h))
      throw InvalidInput("IntegratorConfig: step_h must be > 0");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
      throw InvalidInput("IntegratorConfig: tolerances must be > 0");
    if (max_steps < 1) throw InvalidInput("IntegratorConfig: max_steps must be >= 1");
  }
};

/// States at every accepted step, including t = 0 and t = T.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;

  std::size_t size() const { return times.size(); }
  const Vector& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

inline constexpr double kOverflowLimit = 1e12;

namespace detail {

// Autonomous right-hand side: either the full wide field (layer unset) or
// one layer scaled by `scale`.
struct PieceField {
  const WideField* field = nullptr;
  std::optional<std::size_t> layer;
  double scale = 1.0;

  void operator()(const Vector& x, Vector& out, Vector& scratch) const {
    out.setZero();
    if (layer) {
      accumulate_layer(field->layer(*layer), field->activation(), scale, x, out, scratch);
    } else {
      for (const auto& l : field->layers())
        accumulate_layer(l, field->activation(), 1.0, x, out, scratch);
    }
  }
};

using Observer = std::function<void(double, const Vector&)>;

class Solver {
 public:
  Solver(const IntegratorConfig& cfg, Eigen::Index dim) : cfg_(cfg) {
    cfg_.validate();
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &scratch_, &next_, &err_})
      v->resize(dim);
  }

  // Advances x from t0 to exactly t1 under `f`.
  void advance(const PieceField& f, Vector& x, double t0, double t1, const Observer& observe) {
    if (cfg_.method == Method::fixed_rk4)
      advance_rk4(f, x, t0, t1, observe);
    else
      advance_dopri(f, x, t0, t1, observe);
  }

 private:
  void count_step() {
    if (++steps_ > cfg_.max_steps)
      throw IntegrationError("step budget of " + std::to_string(cfg_.max_steps) +
                             " exhausted before reaching T");
  }

  static void guard(const Vector& x, double t) {
    if (!x.allFinite() || x.lpNorm<1>() > kOverflowLimit)
      throw IntegrationError("state left the overflow guard |x|_1 <= 1e12 at t = " +
                             std::to_string(t));
  }

  void advance_rk4(const PieceField& f, Vector& x, double t0, double t1, const Observer& observe) {
    const double len = t1 - t0;
    const auto n = std::max<long long>(1, static_cast<long long>(std::ceil(len / cfg_.step_h)));
    const double h = len / static_cast<double>(n);
    for (long long k = 0; k < n; ++k) {
      count_step();
      f(x, k1_, scratch_);
      tmp_ = x + 0.5 * h * k1_;
      f(tmp_, k2_, scratch_);
      tmp_ = x + 0.5 * h * k2_;
      f(tmp_, k3_, scratch_);
      tmp_ = x + h * k3_;
      f(tmp_, k4_, scratch_);
      x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
      const double t = (k + 1 == n) ? t1 : t0 + static_cast<double>(k + 1) * h;
      guard(x, t);
      observe(t, x);
    }
  }

  double error_norm(const Vector& x, const Vector& xn) const {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(x[j]), std::abs(xn[j]));
      worst = std::max(worst, std::abs(err_[j]) / sc);
    }
    return worst;
  }

  double initial_step(const PieceField& f, const Vector& x, double span) {
    f(x, k1_, scratch_);
    const auto scaled = [&](const Vector& v) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < v.size(); ++j)
        s = std::max(s, std::abs(v[j]) / (cfg_.abs_tol + cfg_.rel_tol * std::abs(x[j])));
      return s;
    };
    const double d0 = scaled(x);
    const double d1 = scaled(k1_);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    tmp_ = x + h0 * k1_;
    f(tmp_, k2_, scratch_);
    k3_ = k2_ - k1_;
    const double d2 = scaled(k3_) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, span});
  }

  // Dormand-Prince 5(4) with local extrapolation.
  void advance_dopri(const PieceField& f, Vector& x, double t0, double t1, const Observer& observe) {
    if (!(h_ > 0.0)) h_ = initial_step(f, x, t1 - t0);
    double t = t0;
    f(x, k1_, scratch_);
    bool rejected = false;
    while (t < t1) {
      count_step();
      double h = h_;
      const bool last = t + 1.01 * h >= t1;
      if (last) h = t1 - t;

      tmp_ = x + h * (1.0 / 5.0) * k1_;
      f(tmp_, k2_, scratch_);
      tmp_ = x + h * ((3.0 / 40.0) * k1_ + (9.0 / 40.0) * k2_);
      f(tmp_, k3_, scratch_);
      tmp_ = x + h * ((44.0 / 45.0) * k1_ - (56.0 / 15.0) * k2_ + (32.0 / 9.0) * k3_);
      f(tmp_, k4_, scratch_);
      tmp_ = x + h * ((19372.0 / 6561.0) * k1_ - (25360.0 / 2187.0) * k2_ +
                      (64448.0 / 6561.0) * k3_ - (212.0 / 729.0) * k4_);
      f(tmp_, k5_, scratch_);
      tmp_ = x + h * ((9017.0 / 3168.0) * k1_ - (355.0 / 33.0) * k2_ + (46732.0 / 5247.0) * k3_ +
                      (49.0 / 176.0) * k4_ - (5103.0 / 18656.0) * k5_);
      f(tmp_, k6_, scratch_);
      next_ = x + h * ((35.0 / 384.0) * k1_ + (500.0 / 1113.0) * k3_ + (125.0 / 192.0) * k4_ -
                       (2187.0 / 6784.0) * k5_ + (11.0 / 84.0) * k6_);
      f(next_, k7_, scratch_);
      err_ = h * ((71.0 / 57600.0) * k1_ - (71.0 / 16695.0) * k3_ + (71.0 / 1920.0) * k4_ -
                  (17253.0 / 339200.0) * k5_ + (22.0 / 525.0) * k6_ - (1.0 / 40.0) * k7_);

      const double e = next_.allFinite() ? error_norm(x, next_) : HUGE_VAL;
      if (e <= 1.0) {
        t = last ? t1 : t + h;
        x.swap(next_);
        k1_.swap(k7_);
        guard(x, t);
        observe(t, x);
        double factor = e == 0.0 ? 5.0 : 0.9 * std::pow(e, -0.2);
        factor = std::clamp(factor, 0.2, rejected ? 1.0 : 5.0);
        // A clipped final step says little about the natural step length.
        h_ = last ? std::max(h_, h * factor) : h * factor;
        rejected = false;
      } else {
        const double factor = std::isfinite(e) ? std::max(0.2, 0.9 * std::pow(e, -0.2)) : 0.2;
        h_ = h * factor;
        rejected = true;
        if (h_ < 1e-14 * std::max(1.0, std::abs(t)))
          throw IntegrationError("step size underflow at t = " + std::to_string(t));
      }
    }
  }

  IntegratorConfig cfg_;
  std::size_t steps_ = 0;
  double h_ = 0.0;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, scratch_, next_, err_;
};

inline void check_initial(const WideField& field, const Vector& x0) {
  check_dim(field, x0);
  if (!x0.allFinite()) throw InvalidInput("initial condition is not finite");
}

template <class Sink>
void run_wide(const WideField& field, const Vector& x0, double T, const IntegratorConfig& cfg,
              Sink&& sink) {
  check_initial(field, x0);
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("horizon T must be > 0");
  Solver solver(cfg, field.dim());
  Vector x = x0;
  sink(0.0, x);
  solver.advance(PieceField{&field, std::nullopt, 1.0}, x, 0.0, T, sink);
}

template <class Sink>
void run_switched(const SwitchSchedule& schedule, const Vector& x0, const IntegratorConfig& cfg,
                  Sink&& sink) {
  const auto& field = schedule.field();
  check_initial(field, x0);
  Solver solver(cfg, field.dim());
  Vector x = x0;
  sink(0.0, x);
  const double scale = static_cast<double>(schedule.width());
  for (long long k = 0; k < schedule.segments(); ++k) {
    const PieceField piece{&field, schedule.layer_of_segment(k), scale};
    solver.advance(piece, x, schedule.boundary(k), schedule.boundary(k + 1), sink);
  }
}

struct Recorder {
  Trajectory* out;
  void operator()(double t, const Vector& x) const {
    out->times.push_back(t);
    out->states.push_back(x);
  }
};

struct EndpointOnly {
  Vector* out;
  void operator()(double, const Vector& x) const { *out = x; }
};

}  // namespace detail

/// Solves y' = Q(y) on [0, T].
inline Trajectory integrate_wide(const WideField& field, const Vector& x0, double T,
                                 const IntegratorConfig& cfg = {}) {
  Trajectory traj;
  detail::run_wide(field, x0, T, cfg, detail::Recorder{&traj});
  return traj;
}

/// Solves z' = Q_t(z) on [0, T] with T taken from the schedule.
inline Trajectory integrate_switched(const SwitchSchedule& schedule, const Vector& x0,
                                     const IntegratorConfig& cfg = {}) {
  Trajectory traj;
  detail::run_switched(schedule, x0, cfg, detail::Recorder{&traj});
  return traj;
}

namespace detail {

template <class EndpointFn>
std::vector<Vector> parallel_endpoints(const std::vector<Vector>& batch, unsigned threads,
                                       EndpointFn&& endpoint) {
  std::vector<Vector> results(batch.size());
  std::vector<std::exception_ptr> failures(batch.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, batch.size()));

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < batch.size(); i = next++) {
      try {
        results[i] = endpoint(batch[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work);
  }

  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i]) continue;
    const std::string where = "initial condition #" + std::to_string(i) + ": ";
    try {
      std::rethrow_exception(failures[i]);
    } catch (const IntegrationError& e) {
      throw IntegrationError(where + e.what());
    } catch (const DimensionMismatch& e) {
      throw DimensionMismatch(where + e.what());
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + e.what());
    }
  }
  return results;
}

}  // namespace detail

/// Endpoints x(T) for every initial condition, in order. `threads == 0`
/// uses the hardware concurrency; results do not depend on it.
inline std::vector<Vector> flow_map(const WideField& field, const std::vector<Vector>& x0_batch,
                                    double T, const IntegratorConfig& cfg = {},
                                    unsigned threads = 0) {
  return detail::parallel_endpoints(x0_batch, threads, [&](const Vector& x0) {
    Vector end;
    detail::run_wide(field, x0, T, cfg, detail::EndpointOnly{&end});
    return end;
  });
}

inline std::vector<Vector> flow_map(const SwitchSchedule& schedule,
                                    const std::vector<Vector>& x0_batch,
                                    const IntegratorConfig& cfg = {}, unsigned threads = 0) {
  return detail::parallel_endpoints(x0_batch, threads, [&](const Vector& x0) {
    Vector end;
    detail::run_switched(schedule, x0, cfg, detail::EndpointOnly{&end});
    return end;
  });
}

}  // namespace narrow_node
