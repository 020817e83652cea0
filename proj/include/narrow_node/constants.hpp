#pragma once

// Growth and Lipschitz constants of the wide and switched fields, the
// Gronwall velocity/radius bounds, and the switching error bound
//   |z(t) - y(t)| <= (2 T X / N + K T^2 X / (2N)) e^{K T}.
// All norms are L1 (vectors) or L1-induced (matrices).

#include <algorithm>
#include <cmath>
#include <limits>

#include "narrow_node/model.hpp"

namespace narrow_node {

/// Largest absolute column sum.
inline double op_norm_l1(const Matrix& M) {
  if (!M.allFinite()) throw InvalidInput("op_norm_l1: nonfinite entry");
  if (M.size() == 0) return 0.0;
  return M.cwiseAbs().colwise().sum().maxCoeff();
}

inline double norm_l1(const Vector& x) { return x.lpNorm<1>(); }

struct GrowthConstants {
  double c = 0.0;        // velocity offset
  double L = 0.0;        // velocity slope
  double K_tilde = 0.0;  // spatial Lipschitz constant of both fields
  double r = 0.0;        // radius of the initial ball
  double T = 1.0;        // horizon
};

/// c = m max_i |A_i|_1 |S(b_i)|_1,  K = m max_i K_s |A_i|_1 |W_i|_1,  L = K.
inline GrowthConstants growth_constants(const WideField& field, double r, double T) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInput("growth_constants: r must be >= 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("growth_constants: T must be > 0");
  const auto& act = field.activation();
  const double m = static_cast<double>(field.width());
  double offset = 0.0;
  double slope = 0.0;
  for (const auto& layer : field.layers()) {
    const double a = op_norm_l1(layer.A());
    offset = std::max(offset, a * norm_l1(vec_activation(act, layer.b())));
    slope = std::max(slope, act.lipschitz() * a * op_norm_l1(layer.W()));
  }
  GrowthConstants gc;
  gc.c = m * offset;
  gc.K_tilde = m * slope;
  gc.L = gc.K_tilde;
  gc.r = r;
  gc.T = T;
  return gc;
}

namespace detail {

inline void check_time(const GrowthConstants& gc, double t) {
  if (!(t >= 0.0 && t <= gc.T))
    throw InvalidInput("time " + std::to_string(t) + " outside [0, T]");
}

}  // namespace detail

/// X(t) = c + L (r + c t) e^{L t}.
inline double velocity_bound(const GrowthConstants& gc, double t) {
  detail::check_time(gc, t);
  return gc.c + gc.L * (gc.r + gc.c * t) * std::exp(gc.L * t);
}

/// (r + c t) e^{L t}: every trajectory started in the r-ball stays inside.
inline double trajectory_radius(const GrowthConstants& gc, double t) {
  detail::check_time(gc, t);
  return (gc.r + gc.c * t) * std::exp(gc.L * t);
}

/// N * error_bound(gc, N), i.e. (2 T X + K X T^2 / 2) e^{K T} with X = X(T).
inline double error_bound_numerator(const GrowthConstants& gc) {
  const double X = velocity_bound(gc, gc.T);
  return (2.0 * gc.T * X + gc.K_tilde * X * gc.T * gc.T / 2.0) *
         std::exp(gc.K_tilde * gc.T);
}

inline double error_bound(const GrowthConstants& gc, long long N) {
  if (N < 1) throw InvalidInput("error_bound: N must be >= 1");
  // Divide last so that doubling N halves the result exactly.
  return error_bound_numerator(gc) / static_cast<double>(N);
}

/// Smallest N >= 1 with error_bound(gc, N) <= eps.
inline long long min_switches(const GrowthConstants& gc, double eps) {
  if (!(eps > 0.0) || std::isnan(eps)) throw InvalidInput("min_switches: eps must be > 0");
  const double numerator = error_bound_numerator(gc);
  const double guess = std::ceil(numerator / eps);
  if (!(guess < 9.0e18)) throw InvalidInput("min_switches: eps too small for a representable N");
  long long N = std::max(1LL, static_cast<long long>(guess));
  while (error_bound(gc, N) > eps) ++N;
  while (N > 1 && error_bound(gc, N - 1) <= eps) --N;
  return N;
}

}  // namespace narrow_node
