#pragma once

// Finite-alphabet probability primitives: distributions, joint sources,
// channels, Bayes posteriors, entropy and mutual information. All
// information quantities are in bits.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semrd/errors.hpp"

namespace semrd {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Absolute tolerance on probability sums.
inline constexpr double kProbTolerance = 1e-9;

namespace detail {

template <typename Derived>
void check_nonnegative_finite(const Eigen::MatrixBase<Derived>& m,
                              const char* what) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      const auto v = m(i, j);
      if (!std::isfinite(static_cast<double>(v)) || v < 0) {
        throw DomainError(std::string(what) +
                          ": entries must be finite and nonnegative");
      }
    }
  }
}

template <typename Scalar>
void check_unit_sum(Scalar sum, const char* what) {
  if (std::abs(static_cast<double>(sum) - 1.0) > kProbTolerance) {
    throw DomainError(std::string(what) + ": probabilities sum to " +
                      std::to_string(static_cast<double>(sum)) +
                      ", expected 1");
  }
}

// x log2 x with 0 log 0 := 0.
template <typename Scalar>
Scalar xlog2x(Scalar x) {
  return x > 0 ? x * std::log2(x) : Scalar(0);
}

}  // namespace detail

/// Probability vector over a finite alphabet. Entries within the sum
/// tolerance are renormalized once at construction.
template <typename Scalar>
class BasicDistribution {
 public:
  explicit BasicDistribution(Vector<Scalar> probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0) throw DomainError("distribution: empty alphabet");
    detail::check_nonnegative_finite(probs_, "distribution");
    const Scalar sum = probs_.sum();
    detail::check_unit_sum(sum, "distribution");
    probs_ /= sum;
  }

  BasicDistribution(std::initializer_list<Scalar> probs)
      : BasicDistribution(from_list(probs)) {}

  static BasicDistribution uniform(Index n) {
    return BasicDistribution(Vector<Scalar>::Constant(n, Scalar(1) / n));
  }

  const Vector<Scalar>& probs() const { return probs_; }
  Index size() const { return probs_.size(); }
  Scalar operator[](Index i) const { return probs_(i); }

 private:
  static Vector<Scalar> from_list(std::initializer_list<Scalar> probs) {
    Vector<Scalar> v(static_cast<Index>(probs.size()));
    Index i = 0;
    for (Scalar p : probs) v(i++) = p;
    return v;
  }

  Vector<Scalar> probs_;
};

/// Joint law p_{S,X}: row index = semantic symbol s, column index = x.
template <typename Scalar>
class BasicJointSource {
 public:
  explicit BasicJointSource(Matrix<Scalar> joint,
                            std::vector<std::string> s_labels = {},
                            std::vector<std::string> x_labels = {})
      : joint_(std::move(joint)),
        s_labels_(std::move(s_labels)),
        x_labels_(std::move(x_labels)) {
    if (joint_.size() == 0) throw DomainError("joint source: empty matrix");
    detail::check_nonnegative_finite(joint_, "joint source");
    const Scalar sum = joint_.sum();
    detail::check_unit_sum(sum, "joint source");
    joint_ /= sum;
    if (!s_labels_.empty() &&
        static_cast<Index>(s_labels_.size()) != joint_.rows()) {
      throw DimensionMismatch("joint source: s_labels size mismatch");
    }
    if (!x_labels_.empty() &&
        static_cast<Index>(x_labels_.size()) != joint_.cols()) {
      throw DimensionMismatch("joint source: x_labels size mismatch");
    }
  }

  const Matrix<Scalar>& joint() const { return joint_; }
  Index semantic_size() const { return joint_.rows(); }
  Index observation_size() const { return joint_.cols(); }
  const std::vector<std::string>& s_labels() const { return s_labels_; }
  const std::vector<std::string>& x_labels() const { return x_labels_; }

  /// Observation symbols that never occur (p_X(x) = 0).
  std::vector<Index> zero_mass_symbols() const {
    std::vector<Index> out;
    const Vector<Scalar> px = joint_.colwise().sum().transpose();
    for (Index x = 0; x < px.size(); ++x) {
      if (px(x) <= 0) out.push_back(x);
    }
    return out;
  }

 private:
  Matrix<Scalar> joint_;
  std::vector<std::string> s_labels_;
  std::vector<std::string> x_labels_;
};

/// Test channel p_{Y|X}; row x holds p_{Y|X}(.|x).
template <typename Scalar>
class BasicChannel {
 public:
  explicit BasicChannel(Matrix<Scalar> rows) : rows_(std::move(rows)) {
    if (rows_.size() == 0) throw DomainError("channel: empty matrix");
    detail::check_nonnegative_finite(rows_, "channel");
    for (Index x = 0; x < rows_.rows(); ++x) {
      const Scalar sum = rows_.row(x).sum();
      detail::check_unit_sum(sum, "channel row");
      rows_.row(x) /= sum;
    }
  }

  /// Y = X when |Y| >= |X|; otherwise x is sent to x mod |Y|.
  static BasicChannel identity(Index input_size, Index output_size) {
    Matrix<Scalar> m = Matrix<Scalar>::Zero(input_size, output_size);
    for (Index x = 0; x < input_size; ++x) m(x, x % output_size) = 1;
    return BasicChannel(std::move(m));
  }

  static BasicChannel identity(Index n) { return identity(n, n); }

  /// Every row equal to `row`: Y independent of X.
  static BasicChannel constant(Index input_size, const Vector<Scalar>& row) {
    Matrix<Scalar> m(input_size, row.size());
    m.rowwise() = row.transpose();
    return BasicChannel(std::move(m));
  }

  const Matrix<Scalar>& matrix() const { return rows_; }
  Index input_size() const { return rows_.rows(); }
  Index output_size() const { return rows_.cols(); }
  Scalar operator()(Index x, Index y) const { return rows_(x, y); }

 private:
  Matrix<Scalar> rows_;
};

enum class Provenance : std::uint8_t { closed_form, solver, simulated };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::closed_form: return "closed_form";
    case Provenance::solver: return "solver";
    case Provenance::simulated: return "simulated";
  }
  return "unknown";
}

/// An (R, D_p, D_o) triple.
struct RDPoint {
  double rate;
  double d_p;
  double d_o;
  Provenance provenance;

  RDPoint(double rate_bits, double dp, double dob, Provenance prov)
      : rate(rate_bits), d_p(dp), d_o(dob), provenance(prov) {
    if (!(rate >= 0) || !(d_p >= 0) || !(d_o >= 0)) {
      throw DomainError("rd point: rate and distortions must be nonnegative");
    }
  }
};

using Distribution = BasicDistribution<double>;
using JointSource = BasicJointSource<double>;
using Channel = BasicChannel<double>;

// ---------------------------------------------------------------------------
// Raw kernels over Eigen expressions. No validation; callers guarantee shape.

/// I(X;Y) in bits for input law `px` and row-stochastic `w`.
template <typename DerivedP, typename DerivedW>
typename DerivedW::Scalar mutual_information_bits(
    const Eigen::MatrixBase<DerivedP>& px, const Eigen::MatrixBase<DerivedW>& w) {
  using Scalar = typename DerivedW::Scalar;
  const Vector<Scalar> py = w.transpose() * px;
  Scalar info = 0;
  for (Index x = 0; x < w.rows(); ++x) {
    if (px(x) <= 0) continue;
    for (Index y = 0; y < w.cols(); ++y) {
      const Scalar wxy = w(x, y);
      if (wxy <= 0) continue;
      info += px(x) * wxy * std::log2(wxy / py(y));
    }
  }
  return info > 0 ? info : Scalar(0);
}

// ---------------------------------------------------------------------------
// Typed operations.

template <typename Scalar>
BasicDistribution<Scalar> marginal_x(const BasicJointSource<Scalar>& source) {
  return BasicDistribution<Scalar>(source.joint().colwise().sum().transpose());
}

template <typename Scalar>
BasicDistribution<Scalar> marginal_s(const BasicJointSource<Scalar>& source) {
  return BasicDistribution<Scalar>(source.joint().rowwise().sum());
}

/// p_{S|x}. Throws ZeroMassSymbol when p_X(x) = 0.
template <typename Scalar>
BasicDistribution<Scalar> posterior_given_x(
    const BasicJointSource<Scalar>& source, Index x) {
  if (x < 0 || x >= source.observation_size()) {
    throw IndexOutOfRange("posterior_given_x: symbol out of range");
  }
  const Scalar mass = source.joint().col(x).sum();
  if (mass <= 0) {
    throw ZeroMassSymbol("posterior_given_x: p_X(" + std::to_string(x) +
                         ") = 0");
  }
  return BasicDistribution<Scalar>(source.joint().col(x) / mass);
}

template <typename Scalar>
void check_compatible(const BasicJointSource<Scalar>& source,
                      const BasicChannel<Scalar>& channel) {
  if (source.observation_size() != channel.input_size()) {
    throw DimensionMismatch("channel input size " +
                            std::to_string(channel.input_size()) +
                            " does not match |X| = " +
                            std::to_string(source.observation_size()));
  }
}

/// p_Y = p_X W.
template <typename Scalar>
BasicDistribution<Scalar> output_marginal(const BasicDistribution<Scalar>& px,
                                          const BasicChannel<Scalar>& channel) {
  if (px.size() != channel.input_size()) {
    throw DimensionMismatch("output_marginal: |X| mismatch");
  }
  return BasicDistribution<Scalar>(channel.matrix().transpose() * px.probs());
}

/// p_{S|y} under the Markov chain S - X - Y. Throws ZeroMassOutput when
/// p_Y(y) = 0.
template <typename Scalar>
BasicDistribution<Scalar> posterior_given_y(
    const BasicJointSource<Scalar>& source, const BasicChannel<Scalar>& channel,
    Index y) {
  check_compatible(source, channel);
  if (y < 0 || y >= channel.output_size()) {
    throw IndexOutOfRange("posterior_given_y: symbol out of range");
  }
  const Vector<Scalar> joint_sy = source.joint() * channel.matrix().col(y);
  const Scalar py = joint_sy.sum();
  if (py <= 0) {
    throw ZeroMassOutput("posterior_given_y: p_Y(" + std::to_string(y) +
                         ") = 0");
  }
  return BasicDistribution<Scalar>(joint_sy / py);
}

template <typename Scalar>
Scalar mutual_information(const BasicDistribution<Scalar>& px,
                          const BasicChannel<Scalar>& channel) {
  if (px.size() != channel.input_size()) {
    throw DimensionMismatch("mutual_information: |X| mismatch");
  }
  return mutual_information_bits(px.probs(), channel.matrix());
}

template <typename Scalar>
Scalar entropy(const BasicDistribution<Scalar>& p) {
  Scalar h = 0;
  for (Index i = 0; i < p.size(); ++i) h -= detail::xlog2x(p[i]);
  return h;
}

/// h2(p) in bits; DomainError outside [0,1].
template <typename Scalar>
Scalar binary_entropy(Scalar p) {
  if (!(p >= 0 && p <= 1)) {
    throw DomainError("binary_entropy: argument outside [0,1]");
  }
  return -detail::xlog2x(p) - detail::xlog2x(Scalar(1) - p);
}

}  // namespace semrd
