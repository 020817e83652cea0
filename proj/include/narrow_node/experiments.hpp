#pragma once

// Numerical studies: sampled bound verification, convergence sweeps in the
// switch count N, and log-log order estimation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "narrow_node/constants.hpp"
#include "narrow_node/integrate.hpp"
#include "narrow_node/model.hpp"

namespace narrow_node {

namespace detail {

// Uniform in [0, 1) from the top 53 bits; stdlib-independent.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Deterministic samples from the open L1 ball of radius r. The L1 radius is
/// uniform in [0, r) and the direction uniform on the L1 sphere. r == 0
/// yields copies of the origin.
inline std::vector<Vector> sample_ball(double r, Eigen::Index d, std::size_t count,
                                       std::uint64_t seed) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInput("sample_ball: r must be >= 0");
  if (d < 1) throw InvalidInput("sample_ball: dimension must be >= 1");
  std::vector<Vector> out;
  out.reserve(count);
  if (r == 0.0) {
    out.assign(count, Vector::Zero(d));
    return out;
  }
  std::mt19937_64 rng(seed);
  Vector x(d);
  while (out.size() < count) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      x[j] = -std::log1p(-detail::unit_uniform(rng));
      total += x[j];
    }
    if (!(total > 0.0)) continue;
    const double radius = r * detail::unit_uniform(rng);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double sign = (rng() & 1U) ? -1.0 : 1.0;
      x[j] = sign * radius * (x[j] / total);
    }
    if (x.lpNorm<1>() < r) out.push_back(x);
  }
  return out;
}

/// max over sampled x0 in B_r(0) of |z(T; x0) - y(T; x0)|_1.
inline double empirical_error(const WideField& field, double r, double T, int N,
                              std::size_t samples, std::uint64_t seed,
                              const IntegratorConfig& cfg = {}, unsigned threads = 0) {
  if (samples < 1) throw InvalidInput("empirical_error: need at least one sample");
  const SwitchSchedule schedule(field, T, N);
  const auto x0s = sample_ball(r, field.dim(), samples, seed);
  const auto wide = flow_map(field, x0s, T, cfg, threads);
  const auto switched = flow_map(schedule, x0s, cfg, threads);
  double worst = 0.0;
  for (std::size_t i = 0; i < x0s.size(); ++i)
    worst = std::max(worst, (switched[i] - wide[i]).lpNorm<1>());
  return worst;
}

/// Negative least-squares slope of log(error) against log(N) over rows whose
/// error exceeds `noise_floor`. Unset when fewer than two rows qualify.
inline std::optional<double> estimate_order(const std::vector<int>& N_values,
                                            const std::vector<double>& errors,
                                            double noise_floor) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < N_values.size() && k < errors.size(); ++k) {
    if (errors[k] > noise_floor && std::isfinite(errors[k])) {
      xs.push_back(std::log(static_cast<double>(N_values[k])));
      ys.push_back(std::log(errors[k]));
    }
  }
  if (xs.size() < 2) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return -sxy / sxx;
}

struct SweepReport {
  std::vector<int> N_values;
  std::vector<double> max_empirical_error;
  std::vector<double> theoretical_bound;
  std::optional<double> estimated_order;
  std::string instance_digest;
  std::uint64_t seed = 0;
};

inline std::string describe_instance(const WideField& field, double r, double T,
                                     std::uint64_t seed) {
  std::ostringstream s;
  s.precision(17);
  s << "d=" << field.dim() << " m=" << field.width()
    << " activation=" << to_string(field.activation().kind()) << " r=" << r << " T=" << T
    << " seed=" << seed;
  return s.str();
}

/// Threshold below which endpoint errors are treated as integrator noise.
inline double noise_floor(const IntegratorConfig& cfg) { return 100.0 * cfg.abs_tol; }

inline SweepReport convergence_sweep(const WideField& field, double r, double T,
                                     const std::vector<int>& N_list, std::size_t samples,
                                     std::uint64_t seed, const IntegratorConfig& cfg = {},
                                     unsigned threads = 0) {
  if (N_list.empty()) throw InvalidInput("convergence_sweep: empty N list");
  for (std::size_t k = 0; k < N_list.size(); ++k) {
    if (N_list[k] < 1) throw InvalidInput("convergence_sweep: N must be >= 1");
    if (k > 0 && N_list[k] <= N_list[k - 1])
      throw InvalidInput("convergence_sweep: N list must be strictly increasing");
  }
  if (samples < 1) throw InvalidInput("convergence_sweep: need at least one sample");

  const auto gc = growth_constants(field, r, T);
  const auto x0s = sample_ball(r, field.dim(), samples, seed);
  const auto wide = flow_map(field, x0s, T, cfg, threads);

  SweepReport report;
  report.seed = seed;
  report.instance_digest = describe_instance(field, r, T, seed);
  for (int N : N_list) {
    const auto switched = flow_map(SwitchSchedule(field, T, N), x0s, cfg, threads);
    double worst = 0.0;
    for (std::size_t i = 0; i < x0s.size(); ++i)
      worst = std::max(worst, (switched[i] - wide[i]).lpNorm<1>());
    report.N_values.push_back(N);
    report.max_empirical_error.push_back(worst);
    report.theoretical_bound.push_back(error_bound(gc, N));
  }
  report.estimated_order =
      estimate_order(report.N_values, report.max_empirical_error, noise_floor(cfg));
  return report;
}

/// Rows whose empirical error exceeds the bound by more than `tol`.
inline std::size_t count_bound_violations(const SweepReport& report, double tol) {
  std::size_t violations = 0;
  for (std::size_t k = 0; k < report.N_values.size(); ++k)
    if (report.max_empirical_error[k] > report.theoretical_bound[k] + tol) ++violations;
  return violations;
}

/// Worst observed value/bound ratios for the velocity bound X(t) and the
/// radius bound (r + c t) e^{L t} over stored nodes.
struct BoundCheck {
  double worst_velocity_ratio = 0.0;
  double worst_radius_ratio = 0.0;
  std::size_t nodes_checked = 0;

  bool passed() const { return worst_velocity_ratio <= 1.0 && worst_radius_ratio <= 1.0; }

  void merge(const BoundCheck& other) {
    worst_velocity_ratio = std::max(worst_velocity_ratio, other.worst_velocity_ratio);
    worst_radius_ratio = std::max(worst_radius_ratio, other.worst_radius_ratio);
    nodes_checked += other.nodes_checked;
  }
};

namespace detail {

inline double ratio(double value, double bound) {
  if (value == 0.0) return 0.0;
  if (bound <= 0.0) return std::numeric_limits<double>::infinity();
  return value / bound;
}

inline void record_node(BoundCheck& check, const GrowthConstants& gc, double t, double speed,
                        const Vector& x) {
  const double tc = std::min(t, gc.T);
  check.worst_velocity_ratio =
      std::max(check.worst_velocity_ratio, ratio(speed, velocity_bound(gc, tc)));
  check.worst_radius_ratio =
      std::max(check.worst_radius_ratio, ratio(x.lpNorm<1>(), trajectory_radius(gc, tc)));
  ++check.nodes_checked;
}

}  // namespace detail

inline BoundCheck check_wide_trajectory(const WideField& field, const GrowthConstants& gc,
                                        const Trajectory& traj) {
  BoundCheck check;
  for (std::size_t n = 0; n < traj.size(); ++n)
    detail::record_node(check, gc, traj.times[n],
                        eval_wide(field, traj.states[n]).lpNorm<1>(), traj.states[n]);
  return check;
}

/// At a switch node both one-sided velocities are checked.
inline BoundCheck check_switched_trajectory(const SwitchSchedule& schedule,
                                            const GrowthConstants& gc, const Trajectory& traj) {
  BoundCheck check;
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const double t = traj.times[n];
    const Vector& z = traj.states[n];
    double speed = eval_switched(schedule, t, z).lpNorm<1>();
    if (n > 0) speed = std::max(speed, eval_switched(schedule, traj.times[n - 1], z).lpNorm<1>());
    detail::record_node(check, gc, t, speed, z);
  }
  return check;
}

/// Integrates both systems from sampled x0 in B_r(0) and checks the
/// velocity and radius bounds at every stored node.
inline BoundCheck verify_velocity_bound(const WideField& field, double r, double T, int N,
                                        std::size_t samples, std::uint64_t seed,
                                        const IntegratorConfig& cfg = {}) {
  const auto gc = growth_constants(field, r, T);
  const SwitchSchedule schedule(field, T, N);
  BoundCheck check;
  for (const auto& x0 : sample_ball(r, field.dim(), samples, seed)) {
    check.merge(check_wide_trajectory(field, gc, integrate_wide(field, x0, T, cfg)));
    check.merge(check_switched_trajectory(schedule, gc, integrate_switched(schedule, x0, cfg)));
  }
  return check;
}

struct RandomFieldOptions {
  Eigen::Index dim = 2;
  std::size_t width = 2;
  ActivationKind activation = ActivationKind::tanh;
  double horizon = 1.0;
  double max_KT = 6.0;  // outer weights are shrunk until K T <= max_KT
};

/// Entries uniform in [-1, 1].
inline WideField random_field(const RandomFieldOptions& opt, std::mt19937_64& rng) {
  const auto entry = [&rng] { return 2.0 * detail::unit_uniform(rng) - 1.0; };
  const auto d = opt.dim;
  std::vector<ShallowLayer> layers;
  for (std::size_t i = 0; i < opt.width; ++i) {
    Matrix A = Matrix::NullaryExpr(d, d, entry);
    Matrix W = Matrix::NullaryExpr(d, d, entry);
    Vector b = Vector::NullaryExpr(d, entry);
    layers.emplace_back(std::move(A), std::move(W), std::move(b));
  }
  WideField field(std::move(layers), Activation(opt.activation));
  double KT = growth_constants(field, 0.0, opt.horizon).K_tilde * opt.horizon;
  for (double shrink = 1.0; KT > opt.max_KT; shrink *= 1.0 - 1e-12) {
    const double s = shrink * opt.max_KT / KT;
    std::vector<ShallowLayer> scaled;
    for (const auto& l : field.layers()) scaled.emplace_back(s * l.A(), l.W(), l.b());
    field = WideField(std::move(scaled), field.activation());
    KT = growth_constants(field, 0.0, opt.horizon).K_tilde * opt.horizon;
  }
  return field;
}

}  // namespace narrow_node
