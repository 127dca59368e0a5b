#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "semrd/binary_rd.hpp"
#include "semrd/solver.hpp"
#include "test_util.hpp"

using namespace semrd;
using doctest::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const DistortionSpec kTvHamming{SemanticMeasure::total_variation(),
                                ObservationMeasure::hamming()};

JointSource binary_source(double q) { return BinarySourceSpec::symmetric(q).joint_source(); }

JointSource three_by_three() {
  Matrix<double> j(3, 3);
  j << 0.2, 0.05, 0.05, 0.02, 0.25, 0.08, 0.03, 0.1, 0.22;
  return JointSource(j);
}

JointSource uniform_identity(Index n) {
  return JointSource(Matrix<double>(Matrix<double>::Identity(n, n) / double(n)));
}

void check_converged_feasible(const JointSource& src, const DistortionSpec& spec,
                              const SolverResult& r, double dp, double d_o,
                              const SolverConfig& cfg) {
  if (r.status != SolverStatus::converged) return;
  const Feasibility f = feasibility_check(src, spec, r.channel, dp, d_o, cfg.tol_constraint);
  CHECK(f.feasible);
  CHECK(f.achieved_dp == Approx(r.achieved_dp).epsilon(1e-12));
  CHECK(r.rate == Approx(mutual_information(marginal_x(src), r.channel)).epsilon(1e-12));
}

}  // namespace

TEST_CASE("config validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.grid_resolution = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.multistarts = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.tol_constraint = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.refine_iters = 0;
  CHECK_THROWS_AS(solve_rd(binary_source(0.9), kTvHamming, 0.1, 0.1, cfg), DomainError);
}

TEST_CASE("feasibility_check examples") {
  const JointSource src = binary_source(0.9);
  CHECK(feasibility_check(src, kTvHamming, Channel::identity(2), 0, 0).feasible);
  const Channel flat = BinaryChannel{0.5, 0.5}.channel();
  const Feasibility f = feasibility_check(src, kTvHamming, flat, 0.3, 1.0);
  CHECK_FALSE(f.feasible);
  CHECK(f.achieved_dp == Approx(0.4));
  CHECK(f.achieved_do == Approx(0.5));
  const BinaryChannel opt = optimal_channel(BinarySourceSpec::symmetric(0.9), 0.2, 1.0);
  CHECK(feasibility_check(src, kTvHamming, opt.channel(), 0.2, 1.0).feasible);
  CHECK_THROWS_AS(feasibility_check(src, kTvHamming, Channel::identity(3), 1, 1),
                  DimensionMismatch);
}

TEST_CASE("binary examples against the closed form") {
  const SolverConfig cfg;
  const BinarySourceSpec spec = BinarySourceSpec::symmetric(0.9);
  const JointSource src = spec.joint_source();
  SolverResult r = solve_rd(src, kTvHamming, 0.2, 1.0, cfg);
  CHECK(std::abs(r.rate - 0.3990) < 5e-3);
  check_converged_feasible(src, kTvHamming, r, 0.2, 1.0, cfg);
  r = solve_rd(src, kTvHamming, 1.0, 0.11, cfg);
  CHECK(std::abs(r.rate - 0.5001) < 5e-3);
  check_converged_feasible(src, kTvHamming, r, 1.0, 0.11, cfg);
}

TEST_CASE("binary family without the analytic seed") {
  SolverConfig cfg;
  cfg.analytic_seed = false;
  for (double q : {0.6, 0.75, 0.9}) {
    const BinarySourceSpec spec = BinarySourceSpec::symmetric(q);
    const JointSource src = spec.joint_source();
    for (int i = 0; i <= 5; ++i) {
      for (int k = 0; k <= 5; ++k) {
        const double dp = i / 5.0, d_o = k / 5.0;
        const SolverResult r = solve_rd(src, kTvHamming, dp, d_o, cfg);
        CHECK(r.status != SolverStatus::infeasible);
        CHECK(std::abs(r.rate - double(oracle::binary_rate(q, dp, d_o))) < 5e-3);
        check_converged_feasible(src, kTvHamming, r, dp, d_o, cfg);
      }
    }
  }
}

TEST_CASE("lossless bounds give H(X)") {
  const SolverConfig cfg;
  const JointSource src = three_by_three();
  for (const SemanticMeasure& m : {SemanticMeasure::total_variation(),
                                   SemanticMeasure::kl_divergence()}) {
    const DistortionSpec spec{m, ObservationMeasure::hamming()};
    const SolverResult r = solve_rd(src, spec, 0, 0, cfg);
    CHECK(r.rate == Approx(entropy(marginal_x(src))).epsilon(1e-6));
  }
}

TEST_CASE("vacuous bounds give zero rate") {
  const SolverConfig cfg;
  const JointSource src = uniform_identity(3);
  const SolverResult r = solve_rd(src, kTvHamming, 1, 1, cfg);
  CHECK(r.rate == Approx(0.0).epsilon(1e-9));
  CHECK(r.status == SolverStatus::converged);
}

TEST_CASE("semantic constraint at the diameter reduces to the classical problem") {
  const SolverConfig cfg;
  // S = X on a uniform ternary source: classical Hamming rate-distortion.
  const JointSource src = uniform_identity(3);
  for (double d_o : {0.0, 0.1, 0.2, 0.4, 0.6, 0.8}) {
    const SolverResult at_diameter = solve_rd(src, kTvHamming, 1.0, d_o, cfg);
    const SolverResult unconstrained = solve_rd(src, kTvHamming, kInf, d_o, cfg);
    CHECK(std::abs(at_diameter.rate - unconstrained.rate) < 5e-3);
    CHECK(std::abs(at_diameter.rate - double(oracle::uniform_hamming_rd(3, d_o))) < 5e-3);
  }
  // Non-uniform source with KL: both constraints dropped gives zero.
  const JointSource other = three_by_three();
  const DistortionSpec kl{SemanticMeasure::kl_divergence(), ObservationMeasure::hamming()};
  CHECK(solve_rd(other, kl, kInf, kInf, cfg).rate == Approx(0.0).epsilon(1e-9));
}

TEST_CASE("semantic-only problem on a ternary source") {
  // Symbolic constraint dropped: rate never exceeds the lossless value and
  // decreases as the semantic bound grows.
  const SolverConfig cfg;
  const JointSource src = three_by_three();
  double prev = kInf;
  for (double dp : {0.0, 0.05, 0.1, 0.2, 0.4}) {
    const SolverResult r = solve_rd(src, kTvHamming, dp, kInf, cfg);
    CHECK(r.rate <= entropy(marginal_x(src)) + 1e-9);
    CHECK(r.rate <= prev + 5e-3);
    check_converged_feasible(src, kTvHamming, r, dp, kInf, cfg);
    prev = r.rate;
  }
}

TEST_CASE("output alphabet smaller than the source") {
  SolverConfig cfg;
  cfg.output_size = 2;
  const JointSource src = three_by_three();
  const SolverResult tight = solve_rd(src, kTvHamming, 0, 0, cfg);
  CHECK(tight.status == SolverStatus::infeasible);
  CHECK(std::isinf(tight.rate));
  const SolverResult loose = solve_rd(src, kTvHamming, 1, 1, cfg);
  CHECK(loose.status != SolverStatus::infeasible);
  CHECK(loose.channel.output_size() == 2);
}

TEST_CASE("errors") {
  const SolverConfig cfg;
  const JointSource src = binary_source(0.9);
  CHECK_THROWS_AS(solve_rd(src, kTvHamming, -0.1, 0.5, cfg), DomainError);
  const std::vector<Channel> bad{Channel::identity(3)};
  CHECK_THROWS_AS(solve_rd(src, kTvHamming, 0.1, 0.5, cfg, bad), DimensionMismatch);
}

TEST_CASE("determinism") {
  SolverConfig cfg;
  cfg.seed = 42;
  const JointSource src = three_by_three();
  const DistortionSpec kl{SemanticMeasure::kl_divergence(), ObservationMeasure::hamming()};
  const SolverResult a = solve_rd(src, kl, 0.05, 0.4, cfg);
  const SolverResult b = solve_rd(src, kl, 0.05, 0.4, cfg);
  CHECK(a.rate == b.rate);
  CHECK(a.achieved_dp == b.achieved_dp);
  CHECK(a.achieved_do == b.achieved_do);
  CHECK(a.status == b.status);
  CHECK(a.channel.matrix() == b.channel.matrix());
}

TEST_CASE("sweep") {
  const SolverConfig cfg;
  const JointSource src = binary_source(0.9);

  // 1 x 1 grid is a single solve.
  const std::vector<double> one{0.2}, full{1.0};
  const auto single = sweep(src, kTvHamming, one, full, cfg);
  REQUIRE(single.size() == 1);
  CHECK(single[0].result.rate == solve_rd(src, kTvHamming, 0.2, 1.0, cfg).rate);
  CHECK(single[0].point.provenance == Provenance::solver);

  std::vector<double> dps;
  for (int i = 0; i <= 10; ++i) dps.push_back(i / 10.0);
  const auto cells = sweep(src, kTvHamming, dps, full, cfg);
  REQUIRE(cells.size() == dps.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].point.d_p == dps[i]);
    CHECK(std::abs(cells[i].point.rate - double(oracle::binary_rate(0.9, dps[i], 1.0))) < 5e-3);
  }

  const std::vector<double> empty, unsorted{0.3, 0.1};
  CHECK_THROWS_AS(sweep(src, kTvHamming, empty, full, cfg), DomainError);
  CHECK_THROWS_AS(sweep(src, kTvHamming, unsorted, full, cfg), DomainError);
}

TEST_CASE("sweep on a ternary KL problem is monotone along both axes") {
  const SolverConfig cfg;
  const JointSource src = three_by_three();
  const DistortionSpec kl{SemanticMeasure::kl_divergence(), ObservationMeasure::hamming()};
  const std::vector<double> dps{0.0, 0.05, 0.1, 0.3, 0.6}, dos{0.0, 0.2, 0.5, 1.0};
  const auto cells = sweep(src, kl, dps, dos, cfg);
  REQUIRE(cells.size() == 20);
  for (std::size_t j = 0; j < dos.size(); ++j) {
    for (std::size_t i = 0; i < dps.size(); ++i) {
      const SweepCell& c = cells[j * dps.size() + i];
      CHECK(c.point.d_o == dos[j]);
      check_converged_feasible(src, kl, c.result, dps[i], dos[j], cfg);
      if (i > 0) CHECK(c.point.rate <= cells[j * dps.size() + i - 1].point.rate + 5e-3);
      if (j > 0) CHECK(c.point.rate <= cells[(j - 1) * dps.size() + i].point.rate + 5e-3);
    }
  }
}

TEST_CASE("doubly symmetric detection") {
  double q = 0;
  CHECK(match_doubly_symmetric(binary_source(0.75), &q));
  CHECK(q == Approx(0.75));
  CHECK_FALSE(match_doubly_symmetric(BinarySourceSpec(0.3, 0.75, 0.75).joint_source()));
  CHECK_FALSE(match_doubly_symmetric(three_by_three()));
}
