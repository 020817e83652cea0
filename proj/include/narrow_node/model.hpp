#pragma once

// Shallow layers, the wide field sum_i A_i S(W_i x + b_i), and the
// periodically switched narrow field that cycles through the layers.

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "narrow_node/error.hpp"

namespace narrow_node {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ActivationKind { relu, sigmoid, tanh };

inline std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu:
      return "relu";
    case ActivationKind::sigmoid:
      return "sigmoid";
    case ActivationKind::tanh:
      return "tanh";
  }
  return "unknown";
}

inline ActivationKind parse_activation(std::string_view name) {
  if (name == "relu") return ActivationKind::relu;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "tanh") return ActivationKind::tanh;
  throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

/// Scalar activation together with its exact global Lipschitz constant.
class Activation {
 public:
  constexpr explicit Activation(ActivationKind kind = ActivationKind::relu)
      : kind_(kind) {}

  constexpr ActivationKind kind() const { return kind_; }

  constexpr double lipschitz() const {
    return kind_ == ActivationKind::sigmoid ? 0.25 : 1.0;
  }

  double operator()(double x) const {
    switch (kind_) {
      case ActivationKind::relu:
        return x > 0.0 ? x : 0.0;
      case ActivationKind::sigmoid:
        return 1.0 / (1.0 + std::exp(-x));
      case ActivationKind::tanh:
        return std::tanh(x);
    }
    return x;
  }

  friend bool operator==(const Activation&, const Activation&) = default;

 private:
  ActivationKind kind_;
};

/// Componentwise activation S(x) = [s(x_1), ..., s(x_d)].
inline Vector vec_activation(const Activation& act, const Vector& x) {
  if (!x.allFinite()) throw InvalidInput("vec_activation: nonfinite input");
  return x.unaryExpr([&act](double v) { return act(v); });
}

/// One term (A, W, b) of the wide network; A and W are d x d.
class ShallowLayer {
 public:
  ShallowLayer(Matrix A, Matrix W, Vector b)
      : A_(std::move(A)), W_(std::move(W)), b_(std::move(b)) {
    const auto d = b_.size();
    if (d == 0) throw DimensionMismatch("ShallowLayer: empty bias");
    if (A_.rows() != d || A_.cols() != d || W_.rows() != d || W_.cols() != d)
      throw DimensionMismatch("ShallowLayer: A and W must be " +
                              std::to_string(d) + "x" + std::to_string(d));
    if (!A_.allFinite() || !W_.allFinite() || !b_.allFinite())
      throw InvalidInput("ShallowLayer: nonfinite weight");
  }

  const Matrix& A() const { return A_; }
  const Matrix& W() const { return W_; }
  const Vector& b() const { return b_; }
  Eigen::Index dim() const { return b_.size(); }

 private:
  Matrix A_;
  Matrix W_;
  Vector b_;
};

namespace detail {

// out += scale * A S(W x + b), with `pre` as scratch of length d.
inline void accumulate_layer(const ShallowLayer& layer, const Activation& act,
                             double scale, const Vector& x, Vector& out,
                             Vector& pre) {
  pre.noalias() = layer.W() * x;
  pre += layer.b();
  for (Eigen::Index j = 0; j < pre.size(); ++j) pre[j] = act(pre[j]);
  out.noalias() += scale * (layer.A() * pre);
}

}  // namespace detail

/// The wide field Q(x) = sum_i A_i S(W_i x + b_i).
class WideField {
 public:
  WideField(std::vector<ShallowLayer> layers, Activation activation)
      : layers_(std::move(layers)), activation_(activation) {
    if (layers_.empty()) throw InvalidInput("WideField: needs at least one layer");
    dim_ = layers_.front().dim();
    for (const auto& layer : layers_)
      if (layer.dim() != dim_)
        throw DimensionMismatch("WideField: layers have differing dimensions");
  }

  const std::vector<ShallowLayer>& layers() const { return layers_; }
  const ShallowLayer& layer(std::size_t i) const { return layers_.at(i); }
  const Activation& activation() const { return activation_; }
  Eigen::Index dim() const { return dim_; }
  std::size_t width() const { return layers_.size(); }

 private:
  std::vector<ShallowLayer> layers_;
  Activation activation_;
  Eigen::Index dim_ = 0;
};

inline void check_dim(const WideField& field, const Vector& x) {
  if (x.size() != field.dim())
    throw DimensionMismatch("state has dimension " + std::to_string(x.size()) +
                            ", field has " + std::to_string(field.dim()));
}

inline Vector eval_wide(const WideField& field, const Vector& x) {
  check_dim(field, x);
  Vector out = Vector::Zero(field.dim());
  Vector pre(field.dim());
  for (const auto& layer : field.layers())
    detail::accumulate_layer(layer, field.activation(), 1.0, x, out, pre);
  return out;
}

/// T/N-periodic narrow field: on the k-th sub-interval of length T/(mN)
/// it equals m A_i S(W_i x + b_i) with i = k mod m.
class SwitchSchedule {
 public:
  SwitchSchedule(WideField field, double horizon, int switches)
      : field_(std::move(field)), horizon_(horizon), switches_(switches) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
      throw InvalidInput("SwitchSchedule: horizon must be positive");
    if (switches_ < 1) throw InvalidInput("SwitchSchedule: N must be >= 1");
  }

  const WideField& field() const { return field_; }
  double horizon() const { return horizon_; }
  int switches() const { return switches_; }
  std::size_t width() const { return field_.width(); }

  /// Total number of constant pieces on [0, T].
  long long segments() const {
    return static_cast<long long>(width()) * switches_;
  }

  /// Left end of piece k; boundary(segments()) == T exactly.
  double boundary(long long k) const {
    if (k >= segments()) return horizon_;
    return horizon_ * static_cast<double>(k) / static_cast<double>(segments());
  }

  /// Piece containing t under the half-open convention; t == T maps to the
  /// last piece.
  long long segment_at(double t) const {
    const long long count = segments();
    auto k = static_cast<long long>(std::floor(t * static_cast<double>(count) / horizon_));
    if (k < 0) k = 0;
    if (k > count - 1) k = count - 1;
    // Align with boundary() so pieces are exactly [boundary(k), boundary(k+1)).
    while (k + 1 < count && boundary(k + 1) <= t) ++k;
    while (k > 0 && boundary(k) > t) --k;
    return k;
  }

  std::size_t layer_of_segment(long long k) const {
    return static_cast<std::size_t>(k % static_cast<long long>(width()));
  }

 private:
  WideField field_;
  double horizon_;
  int switches_;
};

namespace detail {

inline void check_time(const SwitchSchedule& schedule, double t) {
  if (!(t >= 0.0 && t <= schedule.horizon()))
    throw InvalidInput("time " + std::to_string(t) + " outside [0, " +
                       std::to_string(schedule.horizon()) + "]");
}

}  // namespace detail

inline std::size_t active_index(const SwitchSchedule& schedule, double t) {
  detail::check_time(schedule, t);
  return schedule.layer_of_segment(schedule.segment_at(t));
}

inline Vector eval_switched(const SwitchSchedule& schedule, double t,
                            const Vector& x) {
  detail::check_time(schedule, t);
  check_dim(schedule.field(), x);
  const auto& field = schedule.field();
  Vector out = Vector::Zero(field.dim());
  Vector pre(field.dim());
  detail::accumulate_layer(field.layer(active_index(schedule, t)),
                           field.activation(),
                           static_cast<double>(field.width()), x, out, pre);
  return out;
}

/// Smallest switch boundary strictly after t, capped at T.
inline double next_switch_time(const SwitchSchedule& schedule, double t) {
  if (!(t >= 0.0 && t < schedule.horizon()))
    throw InvalidInput("next_switch_time: t must lie in [0, T)");
  return schedule.boundary(schedule.segment_at(t) + 1);
}

}  // namespace narrow_node
