#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "semrd/binary_rd.hpp"
#include "semrd/probcore.hpp"
#include "test_util.hpp"

using namespace semrd;
using doctest::Approx;

namespace {

JointSource binary_source(double q) { return BinarySourceSpec::symmetric(q).joint_source(); }

Channel wz(double w, double z) { return BinaryChannel{w, z}.channel(); }

Matrix<double> random_stochastic(std::mt19937_64& g, Index rows, Index cols) {
  std::gamma_distribution<double> gamma(0.7, 1.0);
  Matrix<double> m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = gamma(g) + 1e-6;
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

}  // namespace

TEST_CASE("distribution validation") {
  CHECK_NOTHROW(Distribution({0.25, 0.75}));
  CHECK_THROWS_AS(Distribution({0.5, 0.6}), DomainError);
  CHECK_THROWS_AS(Distribution({-0.1, 1.1}), DomainError);
  CHECK_THROWS_AS(Distribution({std::nan(""), 1.0}), DomainError);

  // Within tolerance: renormalized exactly.
  Distribution d({0.5 + 4e-10, 0.5});
  CHECK(d.probs().sum() == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("channel rows must be distributions") {
  Matrix<double> bad(2, 2);
  bad << 0.5, 0.5, 0.3, 0.3;
  CHECK_THROWS_AS(Channel{bad}, DomainError);
  CHECK(Channel::identity(3).matrix().isIdentity());
}

TEST_CASE("zero-mass observation symbols are flagged") {
  Matrix<double> j(2, 3);
  j << 0.5, 0.0, 0.1, 0.2, 0.0, 0.2;
  JointSource src(j);
  CHECK(src.zero_mass_symbols() == std::vector<Index>{1});
}

TEST_CASE("marginal_x") {
  Matrix<double> j(2, 2);
  j << 0.45, 0.05, 0.05, 0.45;
  auto px = marginal_x(JointSource(j)).probs();
  CHECK(px(0) == Approx(0.5));
  CHECK(px(1) == Approx(0.5));

  j << 1, 0, 0, 0;
  px = marginal_x(JointSource(j)).probs();
  CHECK(px(0) == 1.0);
  CHECK(px(1) == 0.0);

  j << 0.25, 0.25, 0.25, 0.25;
  px = marginal_x(JointSource(j)).probs();
  CHECK(px(0) == Approx(0.5));
}

TEST_CASE("posterior_given_x") {
  auto p = posterior_given_x(binary_source(0.9), 0).probs();
  CHECK(p(0) == Approx(0.9));
  CHECK(p(1) == Approx(0.1));

  p = posterior_given_x(binary_source(0.5), 1).probs();
  CHECK(p(0) == Approx(0.5));

  // Independent S and X.
  Vector<double> ps(3), pxv(2);
  ps << 0.2, 0.3, 0.5;
  pxv << 0.4, 0.6;
  JointSource indep(ps * pxv.transpose());
  for (Index x = 0; x < 2; ++x) {
    CHECK((posterior_given_x(indep, x).probs() - ps).cwiseAbs().maxCoeff() < 1e-12);
  }

  Matrix<double> j(2, 2);
  j << 1, 0, 0, 0;
  CHECK_THROWS_AS(posterior_given_x(JointSource(j), 1), ZeroMassSymbol);
  CHECK_THROWS_AS(posterior_given_x(JointSource(j), 2), IndexOutOfRange);
}

TEST_CASE("posterior_given_y") {
  const JointSource src = binary_source(0.9);
  for (Index y = 0; y < 2; ++y) {
    auto p = posterior_given_y(src, wz(0.5, 0.5), y).probs();
    CHECK(p(0) == Approx(0.5));
    CHECK(p(1) == Approx(0.5));
  }
  auto p = posterior_given_y(src, wz(1, 0), 0).probs();
  CHECK(p(0) == Approx(0.9));
  CHECK(p(1) == Approx(0.1));

  // Identity channel reproduces posterior_given_x.
  std::mt19937_64 g(3);
  for (int t = 0; t < 20; ++t) {
    Matrix<double> j = random_stochastic(g, 1, 12).reshaped(3, 4);
    const JointSource s(j);
    for (Index x = 0; x < 4; ++x) {
      const auto a = posterior_given_y(s, Channel::identity(4), x).probs();
      const auto b = posterior_given_x(s, x).probs();
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  // Output with zero mass.
  CHECK_THROWS_AS(posterior_given_y(src, wz(1, 1), 1), ZeroMassOutput);
}

TEST_CASE("posteriors match the direct Bayes oracle") {
  std::mt19937_64 g(11);
  for (int t = 0; t < 30; ++t) {
    Matrix<double> j = random_stochastic(g, 1, 6).reshaped(2, 3);
    const JointSource s(j);
    const Channel w(random_stochastic(g, 3, 4));
    const auto oj = to_oracle(s.joint());
    const auto ow = to_oracle(w.matrix());
    for (Index y = 0; y < 4; ++y) {
      const auto ref = oracle::post_y(oj, ow, y);
      const auto got = posterior_given_y(s, w, y).probs();
      for (Index k = 0; k < 2; ++k) CHECK(got(k) == Approx(double(ref[k])).epsilon(1e-12));
    }
  }
}

TEST_CASE("total probability over outputs recovers p_S") {
  std::mt19937_64 g(5);
  for (int t = 0; t < 50; ++t) {
    Matrix<double> j = random_stochastic(g, 1, 12).reshaped(4, 3);
    const JointSource s(j);
    const Channel w(random_stochastic(g, 3, 5));
    const auto py = output_marginal(marginal_x(s), w).probs();
    Vector<double> acc = Vector<double>::Zero(4);
    for (Index y = 0; y < 5; ++y) acc += py(y) * posterior_given_y(s, w, y).probs();
    CHECK((acc - marginal_s(s).probs()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("mutual_information") {
  const Distribution uniform = Distribution::uniform(2);
  CHECK(mutual_information(uniform, Channel::identity(2)) == Approx(1.0).epsilon(1e-14));
  Vector<double> row(3);
  row << 0.2, 0.5, 0.3;
  CHECK(mutual_information(Distribution({0.1, 0.6, 0.3}), Channel::constant(3, row)) ==
        Approx(0.0).epsilon(1e-14));
  CHECK(mutual_information(uniform, wz(0.9, 0.1)) == Approx(0.5310).epsilon(1e-4));
  CHECK(mutual_information(uniform, wz(0.9, 0.1)) ==
        Approx(double(1 - oracle::h2(0.9L))).epsilon(1e-12));
}

TEST_CASE("mutual information is nonnegative, bounded and label invariant") {
  std::mt19937_64 g(7);
  for (int t = 0; t < 100; ++t) {
    const Matrix<double> pxm = random_stochastic(g, 1, 4);
    const Distribution px(pxm.row(0).transpose());
    const Matrix<double> w = random_stochastic(g, 4, 3);
    const double info = mutual_information(px, Channel(w));
    CHECK(info >= 0);
    CHECK(info <= std::log2(3.0) + 1e-12);
    CHECK(info == Approx(double(oracle::mutual_information(to_oracle(Vector<double>(px.probs())),
                                                            to_oracle(w))))
                      .epsilon(1e-10));
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
    perm.indices() << 2, 0, 1;
    CHECK(mutual_information(px, Channel(w * perm)) == Approx(info).epsilon(1e-12));
  }
}

TEST_CASE("binary_entropy") {
  CHECK(binary_entropy(0.5) == 1.0);
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.11) == Approx(0.4999).epsilon(1e-4));
  CHECK_THROWS_AS(binary_entropy(-0.01), DomainError);
  CHECK_THROWS_AS(binary_entropy(1.01), DomainError);

  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 1000; ++t) {
    const double a = u(g), b = u(g);
    CHECK(binary_entropy((a + b) / 2) >= (binary_entropy(a) + binary_entropy(b)) / 2 - 1e-15);
  }
}

TEST_CASE("entropy of a distribution") {
  CHECK(entropy(Distribution::uniform(8)) == Approx(3.0));
  CHECK(entropy(Distribution({1.0, 0.0})) == 0.0);
}

TEST_CASE("rd point invariants") {
  CHECK_NOTHROW(RDPoint(0.4, 0.2, 1.0, Provenance::closed_form));
  CHECK_THROWS_AS(RDPoint(-0.1, 0.2, 1.0, Provenance::solver), DomainError);
  CHECK_THROWS_AS(RDPoint(0.1, -0.2, 1.0, Provenance::solver), DomainError);
  CHECK(std::string(to_string(Provenance::simulated)) == "simulated");
}
