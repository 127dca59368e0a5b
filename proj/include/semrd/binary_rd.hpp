#pragma once

// Closed-form semantic rate-distortion function of the doubly symmetric
// binary source under TV semantic distortion and Hamming observation
// distortion, with the (w, z) channel parameterization
//
//   p_{Y|X} = [ w  1-w ]
//             [ z  1-z ]

#include <algorithm>
#include <cmath>
#include <string>

#include "semrd/errors.hpp"
#include "semrd/probcore.hpp"

namespace semrd {

/// (S, X) with p_S(0) = rho and p_{X|S} = [[q1, 1-q1], [1-q2, q2]].
template <typename Scalar>
class BasicBinarySourceSpec {
 public:
  BasicBinarySourceSpec(Scalar rho, Scalar q1, Scalar q2) : rho_(rho), q1_(q1), q2_(q2) {
    for (Scalar v : {rho, q1, q2}) {
      if (!(v >= 0 && v <= 1)) {
        throw DomainError("binary source: parameters must lie in [0,1]");
      }
    }
  }

  static BasicBinarySourceSpec symmetric(Scalar q) {
    return BasicBinarySourceSpec(Scalar(0.5), q, q);
  }

  Scalar rho() const { return rho_; }
  Scalar q1() const { return q1_; }
  Scalar q2() const { return q2_; }

  bool doubly_symmetric() const { return rho_ == Scalar(0.5) && q1_ == q2_; }

  /// C = |1 - 2q|. Throws HypothesisViolated off the doubly symmetric family.
  Scalar contrast() const {
    require_doubly_symmetric();
    return std::abs(Scalar(1) - 2 * q1_);
  }

  void require_doubly_symmetric() const {
    if (!doubly_symmetric()) {
      throw HypothesisViolated(
          "closed form requires rho = 0.5 and q1 = q2");
    }
  }

  BasicJointSource<Scalar> joint_source() const {
    Matrix<Scalar> joint(2, 2);
    joint << rho_ * q1_, rho_ * (1 - q1_),
             (1 - rho_) * (1 - q2_), (1 - rho_) * q2_;
    return BasicJointSource<Scalar>(std::move(joint), {"0", "1"}, {"0", "1"});
  }

 private:
  Scalar rho_;
  Scalar q1_;
  Scalar q2_;
};

using BinarySourceSpec = BasicBinarySourceSpec<double>;

/// Binary test channel (w, z) = (p_{Y|X}(0|0), p_{Y|X}(0|1)).
template <typename Scalar>
struct BasicBinaryChannel {
  Scalar w;
  Scalar z;

  BasicChannel<Scalar> channel() const {
    Matrix<Scalar> m(2, 2);
    m << w, 1 - w, z, 1 - z;
    return BasicChannel<Scalar>(std::move(m));
  }
};

using BinaryChannel = BasicBinaryChannel<double>;

namespace detail {

template <typename Scalar>
Scalar clamp_bound(Scalar d, const char* what) {
  if (!(d >= 0)) throw DomainError(std::string(what) + " must be >= 0");
  return std::min(d, Scalar(1));
}

template <typename Scalar>
void check_unit(Scalar v, const char* what) {
  if (!(v >= 0 && v <= 1)) throw DomainError(std::string(what) + " outside [0,1]");
}

}  // namespace detail

/// a(D_o): the semantic slack above which only the symbolic constraint binds.
template <typename Scalar>
Scalar threshold_a(const BasicBinarySourceSpec<Scalar>& spec, Scalar d_o) {
  const Scalar c = spec.contrast();
  d_o = detail::clamp_bound(d_o, "d_o");
  return d_o <= Scalar(0.5) ? 2 * c * d_o * (1 - d_o) : c / 2;
}

/// R(D_p, D_o) in bits. Bounds above 1 are treated as 1.
template <typename Scalar>
Scalar closed_form_rate(const BasicBinarySourceSpec<Scalar>& spec, Scalar d_p,
                        Scalar d_o) {
  const Scalar c = spec.contrast();
  d_p = detail::clamp_bound(d_p, "d_p");
  d_o = detail::clamp_bound(d_o, "d_o");
  if (c > 0 && d_p <= threshold_a(spec, d_o)) {
    const Scalar root = std::sqrt(std::max(Scalar(0), 1 - 2 * d_p / c));
    return 1 - binary_entropy((1 - root) / 2);
  }
  // C = 0 makes the semantic constraint vacuous.
  return 1 - binary_entropy(std::min(d_o, Scalar(0.5)));
}

/// Gamma(w, z) = E d_H(X, Y) for the uniform binary input.
template <typename Scalar>
Scalar gamma_symbolic(Scalar w, Scalar z) {
  detail::check_unit(w, "w");
  detail::check_unit(z, "z");
  return (1 + z - w) / 2;
}

/// Lambda(w, z) = E d_TV(p_{S|X}, p_{S|Y}); removable 0/0 terms are 0.
template <typename Scalar>
Scalar lambda_semantic(const BasicBinarySourceSpec<Scalar>& spec, Scalar w, Scalar z) {
  const Scalar c = spec.contrast();
  detail::check_unit(w, "w");
  detail::check_unit(z, "z");
  // wz/(w+z) = (w+z)/4 - (w-z)^2/(4(w+z)), and likewise for the second term,
  // so Lambda = C/2 - C(w-z)^2/4 * (1/(w+z) + 1/(2-w-z)). Writing it this way
  // keeps Lambda <= C/2 exact in floating point.
  const Scalar lo = w + z;
  const Scalar hi = 2 - w - z;
  const Scalar d2 = (w - z) * (w - z);
  Scalar spread = 0;
  if (lo > 0) spread += d2 / lo;  // lo = 0 forces w = z = 0, where d2 = 0
  if (hi > 0) spread += d2 / hi;
  return c * (Scalar(0.5) - spread / 4);
}

/// I(w, z) = h2((w+z)/2) - (h2(w) + h2(z))/2 for the uniform binary input.
template <typename Scalar>
Scalar binary_mutual_information(Scalar w, Scalar z) {
  const Scalar info =
      binary_entropy((w + z) / 2) - (binary_entropy(w) + binary_entropy(z)) / 2;
  return info > 0 ? info : Scalar(0);
}

/// A minimizing channel for R(D_p, D_o). Below the threshold it is the
/// symmetric pair on Lambda = D_p; above it, the binary symmetric test
/// channel with crossover min(D_o, 1/2).
template <typename Scalar>
BasicBinaryChannel<Scalar> optimal_channel(const BasicBinarySourceSpec<Scalar>& spec,
                                           Scalar d_p, Scalar d_o) {
  const Scalar c = spec.contrast();
  d_p = detail::clamp_bound(d_p, "d_p");
  d_o = detail::clamp_bound(d_o, "d_o");
  Scalar crossover;
  if (c > 0 && d_p <= threshold_a(spec, d_o)) {
    crossover = (1 - std::sqrt(std::max(Scalar(0), 1 - 2 * d_p / c))) / 2;
  } else {
    crossover = std::min(d_o, Scalar(0.5));
  }
  return {1 - crossover, crossover};
}

}  // namespace semrd
