#pragma once

// Semantic probability distortion (a divergence between the posteriors
// p_{S|x} and p_{S|y}), observation distortion d_o(x, y), their expectations
// under a test channel, and max-form sequence distortions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semrd/errors.hpp"
#include "semrd/probcore.hpp"

namespace semrd {

enum class SemanticKind { total_variation, kl_divergence, chi_squared, generic_f };

/// d_p over distributions on S. TV uses the half-L1 convention and KL is in
/// bits. The divergences return +infinity on support mismatch.
class SemanticMeasure {
 public:
  static SemanticMeasure total_variation() {
    return SemanticMeasure(SemanticKind::total_variation, "tv");
  }
  static SemanticMeasure kl_divergence() {
    return SemanticMeasure(SemanticKind::kl_divergence, "kl");
  }
  static SemanticMeasure chi_squared() {
    return SemanticMeasure(SemanticKind::chi_squared, "chi2");
  }

  /// f-divergence sum_s q(s) f(p(s)/q(s)) with f given by samples (t_i, f_i),
  /// interpolated piecewise linearly and extrapolated from the end segments.
  /// f must be convex with f(1) = 0 so the result is nonnegative.
  static SemanticMeasure generic_f(std::string name, std::vector<double> t,
                                   std::vector<double> f) {
    if (t.size() != f.size() || t.size() < 2) {
      throw DomainError("generic_f: need at least two (t, f) samples");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i]) || !std::isfinite(f[i]) || t[i] < 0) {
        throw DomainError("generic_f: samples must be finite, t >= 0");
      }
      if (i > 0 && !(t[i] > t[i - 1])) {
        throw DomainError("generic_f: t samples must be strictly increasing");
      }
    }
    if (t.front() > 1 || t.back() < 1) {
      throw DomainError("generic_f: samples must bracket t = 1");
    }
    for (std::size_t i = 2; i < t.size(); ++i) {
      const double s0 = (f[i - 1] - f[i - 2]) / (t[i - 1] - t[i - 2]);
      const double s1 = (f[i] - f[i - 1]) / (t[i] - t[i - 1]);
      if (s1 < s0 - 1e-12) throw DomainError("generic_f: generator not convex");
    }
    SemanticMeasure m(SemanticKind::generic_f, std::move(name));
    m.t_ = std::move(t);
    m.f_ = std::move(f);
    if (std::abs(m.generator(1.0)) > 1e-9) {
      throw DomainError("generic_f: generator must vanish at t = 1");
    }
    return m;
  }

  SemanticKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  /// Supremum of the measure over pairs of distributions.
  double diameter() const {
    return kind_ == SemanticKind::total_variation
               ? 1.0
               : std::numeric_limits<double>::infinity();
  }

  double generator(double t) const {
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - t_.begin());
    hi = std::clamp<std::size_t>(hi, 1, t_.size() - 1);
    const std::size_t lo = hi - 1;
    const double slope = (f_[hi] - f_[lo]) / (t_[hi] - t_[lo]);
    return f_[lo] + slope * (t - t_[lo]);
  }

  /// Unchecked evaluation on raw vectors of equal length.
  template <typename DerivedP, typename DerivedQ>
  typename DerivedP::Scalar operator()(const Eigen::MatrixBase<DerivedP>& p,
                                       const Eigen::MatrixBase<DerivedQ>& q) const {
    using Scalar = typename DerivedP::Scalar;
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    Scalar acc = 0;
    switch (kind_) {
      case SemanticKind::total_variation:
        return Scalar(0.5) * (p - q).cwiseAbs().sum();
      case SemanticKind::kl_divergence:
        for (Index s = 0; s < p.size(); ++s) {
          if (p(s) <= 0) continue;
          if (q(s) <= 0) return inf;
          acc += p(s) * std::log2(p(s) / q(s));
        }
        return acc > 0 ? acc : Scalar(0);
      case SemanticKind::chi_squared:
        for (Index s = 0; s < p.size(); ++s) {
          if (q(s) <= 0) {
            if (p(s) > 0) return inf;
            continue;
          }
          const Scalar d = p(s) - q(s);
          acc += d * d / q(s);
        }
        return acc;
      case SemanticKind::generic_f:
        for (Index s = 0; s < p.size(); ++s) {
          if (q(s) <= 0) {
            if (p(s) > 0) return inf;
            continue;
          }
          acc += q(s) * Scalar(generator(static_cast<double>(p(s) / q(s))));
        }
        return acc > 0 ? acc : Scalar(0);
    }
    return inf;
  }

  /// Partial derivative of the measure in its second argument, d m(a, b) / d b_s.
  /// Zero where b_s = 0 and the term carries no mass.
  double partial_second(double a, double b) const {
    switch (kind_) {
      case SemanticKind::total_variation:
        return a > b ? -0.5 : (a < b ? 0.5 : 0.0);
      case SemanticKind::kl_divergence:
        return b > 0 ? -a / (b * std::log(2.0)) : 0.0;
      case SemanticKind::chi_squared:
        return b > 0 ? (b * b - a * a) / (b * b) : 0.0;
      case SemanticKind::generic_f: {
        if (b <= 0) return 0.0;
        const double t = a / b;
        const double h = 1e-6 * std::max(1.0, t);
        const double slope = (generator(t + h) - generator(std::max(0.0, t - h))) /
                             (t + h - std::max(0.0, t - h));
        return generator(t) - t * slope;
      }
    }
    return 0.0;
  }

 private:
  SemanticMeasure(SemanticKind kind, std::string name)
      : kind_(kind), name_(std::move(name)) {}

  SemanticKind kind_;
  std::string name_;
  std::vector<double> t_;
  std::vector<double> f_;
};

enum class ObservationKind { hamming, squared_error, custom_matrix };

/// d_o(x, y) over symbol indices.
class ObservationMeasure {
 public:
  static ObservationMeasure hamming() {
    return ObservationMeasure(ObservationKind::hamming, "hamming");
  }

  /// (v_x - v_y)^2 over numeric symbol values; indices are used when no
  /// values are given.
  static ObservationMeasure squared_error(std::vector<double> x_values = {},
                                          std::vector<double> y_values = {}) {
    ObservationMeasure m(ObservationKind::squared_error, "mse");
    m.x_values_ = std::move(x_values);
    m.y_values_ = std::move(y_values);
    return m;
  }

  static ObservationMeasure custom(Matrix<double> costs, std::string name = "matrix") {
    detail::check_nonnegative_finite(costs, "observation cost matrix");
    ObservationMeasure m(ObservationKind::custom_matrix, std::move(name));
    m.costs_ = std::move(costs);
    return m;
  }

  ObservationKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  double operator()(Index x, Index y) const {
    if (x < 0 || y < 0) throw IndexOutOfRange("observation_distance: negative index");
    switch (kind_) {
      case ObservationKind::hamming:
        return x == y ? 0.0 : 1.0;
      case ObservationKind::squared_error: {
        const double d = value(x_values_, x) - value(y_values_, y);
        return d * d;
      }
      case ObservationKind::custom_matrix:
        if (x >= costs_.rows() || y >= costs_.cols()) {
          throw IndexOutOfRange("observation_distance: index outside cost matrix");
        }
        return costs_(x, y);
    }
    return 0.0;
  }

  /// Dense |X| x |Y| table of d_o.
  Matrix<double> cost_matrix(Index nx, Index ny) const {
    Matrix<double> c(nx, ny);
    for (Index x = 0; x < nx; ++x) {
      for (Index y = 0; y < ny; ++y) c(x, y) = (*this)(x, y);
    }
    return c;
  }

 private:
  ObservationMeasure(ObservationKind kind, std::string name)
      : kind_(kind), name_(std::move(name)) {}

  static double value(const std::vector<double>& values, Index i) {
    if (values.empty()) return static_cast<double>(i);
    if (i >= static_cast<Index>(values.size())) {
      throw IndexOutOfRange("observation_distance: no numeric label for symbol");
    }
    return values[static_cast<std::size_t>(i)];
  }

  ObservationKind kind_;
  std::string name_;
  std::vector<double> x_values_;
  std::vector<double> y_values_;
  Matrix<double> costs_;
};

struct DistortionSpec {
  SemanticMeasure semantic = SemanticMeasure::total_variation();
  ObservationMeasure observation = ObservationMeasure::hamming();
};

// ---------------------------------------------------------------------------
// Raw kernels.

/// E d_p(p_{S|X}, p_{S|Y}) for joint p_{S,X} (S x X) and channel w (X x Y).
/// Outputs with p_Y(y) = 0 and pairs with zero weight contribute nothing.
template <typename DerivedJ, typename DerivedW>
typename DerivedW::Scalar expected_semantic_distortion_raw(
    const Eigen::MatrixBase<DerivedJ>& joint, const Eigen::MatrixBase<DerivedW>& w,
    const SemanticMeasure& m) {
  using Scalar = typename DerivedW::Scalar;
  const Vector<Scalar> px = joint.colwise().sum().transpose();
  Matrix<Scalar> post_y = joint * w;
  const Vector<Scalar> py = post_y.colwise().sum().transpose();
  for (Index y = 0; y < post_y.cols(); ++y) {
    if (py(y) > 0) post_y.col(y) /= py(y);
  }
  Scalar acc = 0;
  for (Index x = 0; x < joint.cols(); ++x) {
    if (px(x) <= 0) continue;
    const Vector<Scalar> post_x = joint.col(x) / px(x);
    for (Index y = 0; y < w.cols(); ++y) {
      const Scalar weight = px(x) * w(x, y);
      if (weight <= 0 || py(y) <= 0) continue;
      acc += weight * m(post_x, post_y.col(y));
    }
  }
  return acc;
}

template <typename DerivedP, typename DerivedW, typename DerivedC>
typename DerivedW::Scalar expected_observation_distortion_raw(
    const Eigen::MatrixBase<DerivedP>& px, const Eigen::MatrixBase<DerivedW>& w,
    const Eigen::MatrixBase<DerivedC>& costs) {
  return (px.asDiagonal() * w).cwiseProduct(costs).sum();
}

// ---------------------------------------------------------------------------
// Typed operations.

template <typename Scalar>
Scalar semantic_distance(const SemanticMeasure& m, const BasicDistribution<Scalar>& p,
                         const BasicDistribution<Scalar>& q) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("semantic_distance: distributions differ in length");
  }
  return m(p.probs(), q.probs());
}

inline double observation_distance(const ObservationMeasure& m, Index x, Index y) {
  return m(x, y);
}

template <typename Scalar>
Scalar expected_semantic_distortion(const BasicJointSource<Scalar>& source,
                                    const BasicChannel<Scalar>& channel,
                                    const SemanticMeasure& m) {
  check_compatible(source, channel);
  return expected_semantic_distortion_raw(source.joint(), channel.matrix(), m);
}

template <typename Scalar>
Scalar expected_observation_distortion(const BasicJointSource<Scalar>& source,
                                       const BasicChannel<Scalar>& channel,
                                       const ObservationMeasure& m) {
  check_compatible(source, channel);
  const Vector<Scalar> px = source.joint().colwise().sum().transpose();
  const Matrix<Scalar> costs =
      m.cost_matrix(channel.input_size(), channel.output_size()).template cast<Scalar>();
  return expected_observation_distortion_raw(px, channel.matrix(), costs);
}

namespace detail {
inline void check_sequences(std::span<const Index> xs, std::span<const Index> ys) {
  if (xs.size() != ys.size()) throw LengthMismatch("sequence lengths differ");
  if (xs.empty()) throw EmptySequence("sequence distortion of empty sequences");
}
}  // namespace detail

/// max_i d_o(x_i, y_i).
inline double sequence_observation_distortion(const ObservationMeasure& m,
                                              std::span<const Index> xs,
                                              std::span<const Index> ys) {
  detail::check_sequences(xs, ys);
  double worst = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, m(xs[i], ys[i]));
  return worst;
}

/// max_i d_p(p_{S|x_i}, p_{S|y_i}). `posterior_y(i, y_i)` supplies the
/// reconstruction-side posterior at position i.
template <typename Scalar, typename PosteriorFn>
Scalar sequence_semantic_distortion(const BasicJointSource<Scalar>& source,
                                    const SemanticMeasure& m,
                                    std::span<const Index> xs,
                                    std::span<const Index> ys,
                                    PosteriorFn&& posterior_y) {
  detail::check_sequences(xs, ys);
  Scalar worst = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const BasicDistribution<Scalar> px = posterior_given_x(source, xs[i]);
    const BasicDistribution<Scalar> py = posterior_y(i, ys[i]);
    worst = std::max(worst, semantic_distance(m, px, py));
  }
  return worst;
}

/// Channel-induced posteriors at every position.
template <typename Scalar>
Scalar sequence_semantic_distortion(const BasicJointSource<Scalar>& source,
                                    const BasicChannel<Scalar>& channel,
                                    const SemanticMeasure& m,
                                    std::span<const Index> xs,
                                    std::span<const Index> ys) {
  return sequence_semantic_distortion(
      source, m, xs, ys, [&](std::size_t, Index y) {
        return posterior_given_y(source, channel, y);
      });
}

}  // namespace semrd
