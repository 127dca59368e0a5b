#pragma once

// Numerical evaluation of the information semantic rate-distortion function
//
//   R(D_p, D_o) = min_{p_{Y|X}} I(X;Y)
//                 s.t. E d_p(p_{S|X}, p_{S|Y}) <= D_p,  E d_o(X, Y) <= D_o
//
// over row-stochastic channels. The semantic constraint couples the channel
// through the posteriors p_{S|y} and is not convex, so the solver combines
// many starting channels with a local augmented-Lagrangian refinement.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semrd/distortion.hpp"
#include "semrd/probcore.hpp"

namespace semrd {

struct SolverConfig {
  int grid_resolution = 21;   // grid points per free channel parameter
  int refine_iters = 60;      // outer augmented-Lagrangian passes per start
  int multistarts = 16;       // starts refined locally
  double tol_constraint = 1e-7;
  double tol_rate = 1e-8;
  std::uint64_t seed = 0;
  Index output_size = 0;      // |Y|; 0 means |Y| = |X|
  bool analytic_seed = true;  // seed with the closed-form minimizer when the
                              // source is the doubly symmetric binary one
  int continuation_steps = 4; // extra start traced from the identity through
                              // d_p/k, 2d_p/k, ...; 0 disables

  void validate() const;
};

enum class SolverStatus { converged, feasible_not_converged, infeasible };

const char* to_string(SolverStatus s);

struct SolverResult {
  double rate;  // bits; +infinity when infeasible
  Channel channel;
  double achieved_dp;
  double achieved_do;
  SolverStatus status;
};

struct Feasibility {
  bool feasible;
  double achieved_dp;
  double achieved_do;
};

/// Both expected distortions of `channel` against the bounds, with slack
/// `tol_constraint`.
Feasibility feasibility_check(const JointSource& source, const DistortionSpec& spec,
                              const Channel& channel, double d_p, double d_o,
                              double tol_constraint = 1e-7);

/// Best feasible I(X;Y) found. Deterministic for a fixed cfg.seed. Bounds may
/// be +infinity to drop a constraint. `warm_starts` are extra starting
/// channels (they must have the solver's |X| x |Y| shape).
SolverResult solve_rd(const JointSource& source, const DistortionSpec& spec, double d_p,
                      double d_o, const SolverConfig& cfg,
                      std::span<const Channel> warm_starts = {});

struct SweepCell {
  RDPoint point;
  SolverResult result;
};

/// One cell per (d_p, d_o) pair, ordered with d_o as the outer index and d_p
/// as the inner one. Each cell is warm-started from its lower neighbours
/// along both axes, so rates never increase along either axis.
std::vector<SweepCell> sweep(const JointSource& source, const DistortionSpec& spec,
                             std::span<const double> dp_grid,
                             std::span<const double> do_grid, const SolverConfig& cfg);

/// True when `source` is the doubly symmetric binary source (rho = 0.5,
/// q1 = q2) within 1e-12; writes its q.
bool match_doubly_symmetric(const JointSource& source, double* q_out = nullptr);

}  // namespace semrd
