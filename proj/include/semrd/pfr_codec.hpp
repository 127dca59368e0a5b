#pragma once

// One-shot semantic code built on the Poisson functional representation.
//
// Encoder and decoder share a stream of proposals Y~_1, Y~_2, ... drawn
// i.i.d. from p_{Y^n}; the encoder additionally sees the arrival times
// T_1 < T_2 < ... of a unit-rate Poisson process and sends
//
//   K = argmin_i  T_i * p_{Y^n}(Y~_i) / p_{Y^n|X^n}(Y~_i | x^n),
//
// and the decoder outputs Y~_K. Then (X^n, Y~_K) has the joint law
// p_{X^n} p_{Y^n|X^n}, and H(K) <= nI + log(nI + 1) + 4.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semrd/distortion.hpp"
#include "semrd/probcore.hpp"
#include "semrd/rng.hpp"

namespace semrd {

struct PfrConfig {
  Index n = 1;
  std::size_t trials = 1000;
  std::size_t max_proposals = std::size_t{1} << 20;
  std::uint64_t seed = 0;

  void validate() const;
};

using SymbolSequence = std::vector<Index>;

/// Outcome of the argmin scan. k_index is 1-based.
struct PfrSelection {
  std::size_t k_index = 0;
  bool truncated = false;  // stop rule not reached within max_proposals
  std::size_t scanned = 0;
  SymbolSequence proposal;  // Y~_K
};

struct PfrTrialRecord {
  std::size_t k_index;
  SymbolSequence x_seq;
  SymbolSequence y_seq;
  double seq_do;
  double seq_dp;
  bool truncated;
};

/// Poisson arrival times as cumulative sums of unit exponentials.
class ArrivalStream {
 public:
  explicit ArrivalStream(std::uint64_t seed) : rng_(seed) {}
  double next() { return time_ += rng_.exponential(); }

 private:
  RandomStream rng_;
  double time_ = 0;
};

/// I.i.d. length-n sequences from a single-letter law.
class ProposalStream {
 public:
  ProposalStream(std::uint64_t seed, Vector<double> law, Index n)
      : rng_(seed), law_(std::move(law)), n_(n) {}

  SymbolSequence next() {
    SymbolSequence y(static_cast<std::size_t>(n_));
    for (auto& s : y) s = rng_.categorical(law_);
    return y;
  }

 private:
  RandomStream rng_;
  Vector<double> law_;
  Index n_;
};

/// Scans proposals in arrival order and returns the minimizer of
/// t_i * p_{Y^n}(y~_i) / p_{Y^n|X^n}(y~_i | x^n). The scan stops once
/// t_i * min_y ratio exceeds the best score, which makes the result exact;
/// otherwise it is the argmin over the first max_proposals and flagged as
/// truncated. Proposals with zero conditional mass are skipped.
PfrSelection pfr_select(const SymbolSequence& x_seq,
                        const std::function<SymbolSequence()>& next_proposal,
                        const std::function<double()>& next_arrival,
                        const Distribution& output_law, const Channel& channel,
                        std::size_t max_proposals);

/// p_Y = p_X W for the source's observation marginal.
Distribution proposal_law(const JointSource& source, const Channel& channel);

/// Encoder: the common randomness seed regenerates both substreams.
PfrSelection encode(const SymbolSequence& x_seq, std::uint64_t common_seed,
                    const JointSource& source, const Channel& channel,
                    const PfrConfig& cfg);

/// Decoder: the k-th proposal of the shared proposal substream.
SymbolSequence decode(std::size_t k_index, std::uint64_t common_seed,
                      const Distribution& output_law, const PfrConfig& cfg);

/// One encode/decode round with fresh X^n and fresh common randomness.
PfrTrialRecord run_trial(const JointSource& source, const Channel& channel,
                         const DistortionSpec& spec, const PfrConfig& cfg,
                         std::size_t trial);

struct ChiSquaredFit {
  double statistic;
  int dof;
  double p_value;
};

/// Pearson goodness of fit of `counts` against `probs` (same shape).
ChiSquaredFit chi_squared_gof(const Matrix<double>& counts, const Matrix<double>& probs);

/// Upper regularized incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);

struct PfrReport {
  Index n;
  std::size_t trials;
  std::uint64_t seed;
  double mutual_information;      // bits per symbol
  double empirical_rate;          // plug-in H(K) / n, bits per symbol
  double bound_rhs;               // I + (log2(nI + 1) + 4) / n
  double bound_rhs_nats_reading;  // same bound read in nats, converted to bits
  double estimator_slack;         // support / (2 trials ln 2)
  std::size_t k_support;
  std::size_t k_max;
  double seq_do_mean;
  double seq_do_stderr;
  double seq_dp_mean;
  double seq_dp_stderr;
  double tv_joint;                // single-letter empirical joint vs p_X W
  double truncated_fraction;
  Matrix<double> joint_counts;    // single-letter (x, y) histogram
  ChiSquaredFit joint_fit;
  std::vector<std::string> warnings;
};

PfrReport simulate(const JointSource& source, const Channel& channel,
                   const DistortionSpec& spec, const PfrConfig& cfg);

}  // namespace semrd
