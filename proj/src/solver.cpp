#include "semrd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semrd/binary_rd.hpp"
#include "semrd/parallel.hpp"
#include "semrd/rng.hpp"

namespace semrd {

namespace {

using Mat = Matrix<double>;
using Vec = Vector<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kGridCap = 20000;
constexpr double kGradientCap = 1e3;

struct Eval {
  double rate = kInf;
  double dp = kInf;
  double dob = kInf;
};

struct Candidate {
  Mat w;
  Eval eval;
};

// Projects v onto the probability simplex (sort-based).
void project_simplex(Eigen::Ref<Vec> v) {
  Vec u = v;
  std::sort(u.data(), u.data() + u.size(), std::greater<>());
  double cumsum = 0;
  double theta = 0;
  for (Index i = 0; i < u.size(); ++i) {
    cumsum += u(i);
    const double t = (cumsum - 1) / static_cast<double>(i + 1);
    if (u(i) - t > 0) theta = t;
  }
  v = (v.array() - theta).max(0.0).matrix();
}

class Problem {
 public:
  Problem(const JointSource& source, const DistortionSpec& spec, double d_p, double d_o,
          Index ny, double tol)
      : joint_(source.joint()),
        px_(joint_.colwise().sum().transpose()),
        costs_(spec.observation.cost_matrix(joint_.cols(), ny)),
        measure_(spec.semantic),
        d_p_(d_p),
        d_o_(d_o),
        tol_(tol),
        semantic_active_(!(d_p >= spec.semantic.diameter())),
        observation_active_(std::isfinite(d_o)) {
    post_x_ = joint_;
    for (Index x = 0; x < px_.size(); ++x) {
      if (px_(x) > 0) post_x_.col(x) /= px_(x);
    }
  }

  Index nx() const { return joint_.cols(); }
  Index ny() const { return costs_.cols(); }
  double px(Index x) const { return px_(x); }
  const Vec& px() const { return px_; }
  const Mat& joint() const { return joint_; }
  const SemanticMeasure& measure() const { return measure_; }
  const Mat& costs() const { return costs_; }
  double tol() const { return tol_; }
  double d_p() const { return d_p_; }
  double d_o() const { return d_o_; }

  Eval evaluate(const Mat& w) const {
    Eval e;
    e.rate = mutual_information_bits(px_, w);
    e.dp = semantic_active_ ? expected_semantic_distortion_raw(joint_, w, measure_) : 0.0;
    e.dob = observation_active_ ? expected_observation_distortion_raw(px_, w, costs_) : 0.0;
    return e;
  }

  bool feasible(const Eval& e, double slack) const {
    return e.dp <= d_p_ + slack && e.dob <= d_o_ + slack;
  }
  bool feasible(const Eval& e) const { return feasible(e, tol_); }

  double excess_p(const Eval& e) const { return semantic_active_ ? e.dp - d_p_ : -kInf; }
  double excess_o(const Eval& e) const { return observation_active_ ? e.dob - d_o_ : -kInf; }

  double violation(const Eval& e) const {
    return std::max(0.0, excess_p(e)) + std::max(0.0, excess_o(e));
  }

  // dI/dW in bits.
  Mat rate_gradient(const Mat& w) const {
    const Vec py = w.transpose() * px_;
    Mat g = Mat::Zero(w.rows(), w.cols());
    for (Index x = 0; x < w.rows(); ++x) {
      if (px_(x) <= 0) continue;
      for (Index y = 0; y < w.cols(); ++y) {
        const double ratio =
            py(y) > 0 ? std::max(w(x, y), 1e-12) / py(y) : 1.0 / px_(x);
        g(x, y) = px_(x) * std::log2(ratio);
      }
    }
    return g;
  }

  // d E d_p / dW, differentiating through the posteriors p_{S|y}.
  Mat semantic_gradient(const Mat& w) const {
    const Index ns = joint_.rows();
    Mat post_y = joint_ * w;
    const Vec py = post_y.colwise().sum().transpose();
    for (Index y = 0; y < w.cols(); ++y) {
      if (py(y) > 0) post_y.col(y) /= py(y);
    }
    Mat g = Mat::Zero(w.rows(), w.cols());
    Mat c = Mat::Zero(ns, w.cols());
    for (Index x = 0; x < w.rows(); ++x) {
      if (px_(x) <= 0) continue;
      for (Index y = 0; y < w.cols(); ++y) {
        if (py(y) <= 0) continue;
        const double value = measure_(post_x_.col(x), post_y.col(y));
        g(x, y) = px_(x) * std::min(value, kGradientCap);
        const double weight = px_(x) * w(x, y);
        if (weight <= 0) continue;
        for (Index s = 0; s < ns; ++s) {
          c(s, y) += weight * measure_.partial_second(post_x_(s, x), post_y(s, y));
        }
      }
    }
    for (Index y = 0; y < w.cols(); ++y) {
      if (py(y) <= 0) continue;
      const double self = post_y.col(y).dot(c.col(y));
      for (Index x = 0; x < w.rows(); ++x) {
        if (px_(x) <= 0) continue;
        g(x, y) += (joint_.col(x).dot(c.col(y)) - px_(x) * self) / py(y);
      }
    }
    return g.cwiseMax(-kGradientCap).cwiseMin(kGradientCap);
  }

  Mat observation_gradient() const { return px_.asDiagonal() * costs_; }

  // Rows for symbols that never occur are left untouched.
  void project(Mat& w) const {
    for (Index x = 0; x < w.rows(); ++x) {
      if (px_(x) <= 0) continue;
      Vec row = w.row(x).transpose();
      project_simplex(row);
      w.row(x) = row.transpose();
    }
  }

 private:
  Mat joint_;
  Vec px_;
  Mat post_x_;
  Mat costs_;
  const SemanticMeasure& measure_;
  double d_p_;
  double d_o_;
  double tol_;
  bool semantic_active_;
  bool observation_active_;
};

Mat mix(const Mat& a, const Mat& b, double t) { return (1 - t) * a + t * b; }

// Moves an infeasible w along the segment toward a feasible anchor until it
// satisfies the constraints.
Candidate repair(const Problem& p, const Mat& w, const Candidate& anchor) {
  double lo = 0;
  double hi = 1;
  Candidate best = anchor;
  for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    Mat m = mix(w, anchor.w, mid);
    const Eval e = p.evaluate(m);
    if (p.feasible(e, 0.5 * p.tol())) {
      hi = mid;
      best = {std::move(m), e};
    } else {
      lo = mid;
    }
  }
  return best;
}

struct RefineOutcome {
  Candidate best;
  bool converged = false;
};

class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const Problem& p, const SolverConfig& cfg) : p_(p), cfg_(cfg) {}

  RefineOutcome run(Candidate start) {
    RefineOutcome out{start, false};
    Mat w = start.w;
    double prev_violation = kInf;
    int quiet = 0;
    for (int outer = 0; outer < cfg_.refine_iters; ++outer) {
      inner(w);
      const Eval e = p_.evaluate(w);
      Candidate cand =
          p_.feasible(e) ? Candidate{w, e} : repair(p_, w, out.best);
      const double gain = out.best.eval.rate - cand.eval.rate;
      if (gain > 0) out.best = std::move(cand);

      const double violation = p_.violation(e);
      const bool settled = violation <= 1e-6 && std::abs(gain) < cfg_.tol_rate;
      quiet = settled || (gain < cfg_.tol_rate && violation <= cfg_.tol_constraint)
                  ? quiet + 1
                  : 0;
      if (quiet >= 2) {
        out.converged = true;
        break;
      }
      lambda_p_ = std::max(0.0, lambda_p_ + mu_ * p_.excess_p(e));
      lambda_o_ = std::max(0.0, lambda_o_ + mu_ * p_.excess_o(e));
      if (violation > 0.25 * prev_violation) mu_ = std::min(mu_ * 4, 1e9);
      prev_violation = violation;
    }
    return out;
  }

 private:
  double lagrangian(const Eval& e) const {
    double value = e.rate;
    const double sp = std::max(0.0, p_.excess_p(e) + lambda_p_ / mu_);
    const double so = std::max(0.0, p_.excess_o(e) + lambda_o_ / mu_);
    value += 0.5 * mu_ * (sp * sp + so * so);
    return value;
  }

  Mat gradient(const Mat& w, const Eval& e) const {
    Mat g = p_.rate_gradient(w);
    const double sp = std::max(0.0, p_.excess_p(e) + lambda_p_ / mu_);
    const double so = std::max(0.0, p_.excess_o(e) + lambda_o_ / mu_);
    if (sp > 0) g += mu_ * sp * p_.semantic_gradient(w);
    if (so > 0) g += mu_ * so * p_.observation_gradient();
    return g;
  }

  void inner(Mat& w) {
    Eval e = p_.evaluate(w);
    double value = lagrangian(e);
    for (int it = 0; it < 200; ++it) {
      const Mat g = gradient(w, e);
      bool accepted = false;
      while (step_ > 1e-16) {
        Mat trial = w - step_ * g;
        p_.project(trial);
        const Mat delta = trial - w;
        const Eval te = p_.evaluate(trial);
        const double tv = lagrangian(te);
        if (tv <= value + 1e-4 * g.cwiseProduct(delta).sum()) {
          const double moved = delta.cwiseAbs().maxCoeff();
          w = std::move(trial);
          e = te;
          const double decrease = value - tv;
          value = tv;
          step_ = std::min(step_ * 2, 1e3);
          accepted = true;
          if (moved < 1e-13 || decrease < 1e-15) return;
          break;
        }
        step_ *= 0.5;
      }
      if (!accepted) {
        step_ = 1e-3;
        return;
      }
    }
  }

  const Problem& p_;
  const SolverConfig& cfg_;
  double lambda_p_ = 0;
  double lambda_o_ = 0;
  double mu_ = 10;
  double step_ = 1e-2;
};

// Distinct compositions of `total` into `parts` nonnegative integers.
void compositions(int total, Index parts, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (static_cast<Index>(cur.size()) + 1 == parts) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = total; k >= 0; --k) {
    cur.push_back(k);
    compositions(total - k, parts, cur, out);
    cur.pop_back();
  }
}

double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Grid over the product of row simplices; resolution is lowered until the
// grid fits kGridCap points.
std::vector<Mat> grid_seeds(const Problem& p, int resolution) {
  std::vector<Index> rows;
  for (Index x = 0; x < p.nx(); ++x) {
    if (p.px(x) > 0) rows.push_back(x);
  }
  const Index ny = p.ny();
  if (resolution < 2) return {};
  int res = resolution;
  auto count = [&](int r) {
    return std::pow(binomial(r - 1 + static_cast<int>(ny) - 1, static_cast<int>(ny) - 1),
                    static_cast<double>(rows.size()));
  };
  while (res > 2 && count(res) > static_cast<double>(kGridCap)) --res;
  if (count(res) > static_cast<double>(kGridCap)) return {};

  std::vector<std::vector<int>> comps;
  std::vector<int> cur;
  compositions(res - 1, ny, cur, comps);

  std::vector<Mat> out;
  Mat base = Channel::identity(p.nx(), ny).matrix();
  std::vector<std::size_t> idx(rows.size(), 0);
  while (true) {
    Mat w = base;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (Index y = 0; y < ny; ++y) {
        w(rows[r], y) = comps[idx[r]][static_cast<std::size_t>(y)] / double(res - 1);
      }
    }
    out.push_back(std::move(w));
    std::size_t r = 0;
    while (r < rows.size() && ++idx[r] == comps.size()) idx[r++] = 0;
    if (r == rows.size()) break;
  }
  return out;
}

Mat random_channel(RandomStream& rng, Index nx, Index ny) {
  Mat w(nx, ny);
  for (Index x = 0; x < nx; ++x) {
    for (Index y = 0; y < ny; ++y) w(x, y) = rng.exponential();
    w.row(x) /= w.row(x).sum();
  }
  return w;
}

// Follows a local minimizer from the identity while the bounds grow from
// (0, 0) toward (d_p, d_o) along `path` in `continuation_steps` stages. Each
// stage's optimum is feasible for every later stage.
enum class Path { semantic, symbolic, diagonal };

bool continuation_start(const JointSource& source, const DistortionSpec& spec, double d_p,
                        double d_o, Index ny, const SolverConfig& cfg, const Mat& identity,
                        Path path, Mat& out) {
  const int steps = cfg.continuation_steps;
  if (steps < 2 || !std::isfinite(d_o) || !(d_p < spec.semantic.diameter())) return false;
  Mat w = identity;
  for (int k = 1; k < steps; ++k) {
    const double frac = static_cast<double>(k) / steps;
    const double sp = path == Path::symbolic ? d_p : d_p * frac;
    const double so = path == Path::semantic ? d_o : d_o * frac;
    const Problem stage(source, spec, sp, so, ny, cfg.tol_constraint);
    const Eval e = stage.evaluate(w);
    if (!stage.feasible(e)) return false;
    AugmentedLagrangian alm(stage, cfg);
    w = alm.run({w, e}).best.w;
  }
  out = std::move(w);
  return true;
}

}  // namespace

void SolverConfig::validate() const {
  if (grid_resolution < 1 || refine_iters < 1 || multistarts < 1 || continuation_steps < 0) {
    throw DomainError("solver config: counts must be >= 1");
  }
  if (!(tol_constraint > 0) || !(tol_rate > 0)) {
    throw DomainError("solver config: tolerances must be > 0");
  }
  if (output_size < 0) throw DomainError("solver config: output size must be >= 0");
}

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::feasible_not_converged: return "feasible_not_converged";
    case SolverStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

bool match_doubly_symmetric(const JointSource& source, double* q_out) {
  if (source.semantic_size() != 2 || source.observation_size() != 2) return false;
  const Mat& j = source.joint();
  const double q = 2 * j(0, 0);
  Mat expected(2, 2);
  expected << q / 2, (1 - q) / 2, (1 - q) / 2, q / 2;
  if ((j - expected).cwiseAbs().maxCoeff() > 1e-12) return false;
  if (q_out) *q_out = std::clamp(q, 0.0, 1.0);
  return true;
}

Feasibility feasibility_check(const JointSource& source, const DistortionSpec& spec,
                              const Channel& channel, double d_p, double d_o,
                              double tol_constraint) {
  const double dp = expected_semantic_distortion(source, channel, spec.semantic);
  const double dob = expected_observation_distortion(source, channel, spec.observation);
  return {dp <= d_p + tol_constraint && dob <= d_o + tol_constraint, dp, dob};
}

SolverResult solve_rd(const JointSource& source, const DistortionSpec& spec, double d_p,
                      double d_o, const SolverConfig& cfg,
                      std::span<const Channel> warm_starts) {
  cfg.validate();
  if (!(d_p >= 0) || !(d_o >= 0)) throw DomainError("solve_rd: bounds must be >= 0");
  const Index nx = source.observation_size();
  const Index ny = cfg.output_size > 0 ? cfg.output_size : nx;
  for (const Channel& c : warm_starts) {
    if (c.input_size() != nx || c.output_size() != ny) {
      throw DimensionMismatch("solve_rd: warm start has the wrong shape");
    }
  }
  const Problem problem(source, spec, d_p, d_o, ny, cfg.tol_constraint);

  // Ordered seed list: analytic, warm starts, structured, grid, random.
  std::vector<Mat> seeds;
  std::size_t priority = 0;
  double q = 0;
  if (cfg.analytic_seed && ny == 2 && match_doubly_symmetric(source, &q) &&
      spec.semantic.kind() == SemanticKind::total_variation &&
      spec.observation.kind() == ObservationKind::hamming) {
    const auto bin = BinarySourceSpec::symmetric(q);
    const auto wz = optimal_channel(bin, std::min(d_p, 1.0), std::min(d_o, 1.0));
    seeds.push_back(wz.channel().matrix());
  }
  for (const Channel& c : warm_starts) seeds.push_back(c.matrix());
  const std::size_t identity_index = seeds.size();

  // The identity and its blends with the uniform channel are always refined:
  // they keep the symbol labelling, which rate-ordered starts can lose.
  const Mat identity = Channel::identity(nx, ny).matrix();
  const Vec uniform_row = Vec::Constant(ny, 1.0 / static_cast<double>(ny));
  const Mat uniform = Channel::constant(nx, uniform_row).matrix();
  seeds.push_back(identity);
  for (Path path : {Path::semantic, Path::symbolic, Path::diagonal}) {
    if (Mat traced; continuation_start(source, spec, d_p, d_o, ny, cfg, identity, path, traced)) {
      seeds.push_back(std::move(traced));
    }
  }
  for (int k = 1; k < 10; ++k) seeds.push_back(mix(uniform, identity, k / 10.0));
  priority = seeds.size();
  seeds.push_back(uniform);
  for (Index y = 0; y < ny; ++y) {
    seeds.push_back(Channel::constant(nx, Vec::Unit(ny, y)).matrix());
  }
  if (ny == nx) seeds.push_back(Channel::constant(nx, problem.px()).matrix());
  const std::size_t structured_end = seeds.size();
  for (Mat& g : grid_seeds(problem, cfg.grid_resolution)) seeds.push_back(std::move(g));
  const std::size_t grid_end = seeds.size();
  for (int i = 0; i < cfg.multistarts; ++i) {
    RandomStream rng(derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(i)}));
    Mat w = random_channel(rng, nx, ny);
    // Random mixtures with the identity land closer to the feasible set.
    seeds.push_back(mix(w, identity, rng.uniform()));
  }

  // Evaluate seeds; keep feasible ones, repairing non-grid seeds when an
  // anchor is known.
  std::vector<Candidate> feasible;
  std::vector<std::size_t> origin;
  std::vector<std::pair<std::size_t, Candidate>> pending;
  bool any_finite = false;
  std::optional<Candidate> anchor;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    Eval e = problem.evaluate(seeds[i]);
    if (std::isfinite(e.dp)) any_finite = true;
    if (problem.feasible(e)) {
      // The identity is the preferred repair anchor; otherwise the first
      // feasible seed.
      if (!anchor || i == identity_index) anchor = Candidate{seeds[i], e};
      feasible.push_back({seeds[i], e});
      origin.push_back(i);
    } else if (i < structured_end || i >= grid_end) {
      pending.emplace_back(i, Candidate{seeds[i], e});
    }
  }
  if (!any_finite) {
    throw NonfiniteDistortion("solve_rd: semantic distortion infinite at every candidate");
  }
  if (feasible.empty()) {
    const Eval e = problem.evaluate(identity);
    return {kInf, Channel(identity), e.dp, e.dob, SolverStatus::infeasible};
  }
  for (auto& [i, cand] : pending) {
    Candidate fixed = repair(problem, cand.w, *anchor);
    feasible.push_back(std::move(fixed));
    origin.push_back(i);
  }

  // Start selection: priority seeds first, then by rate with a diversity
  // filter. Ties keep seed order.
  std::vector<std::size_t> order(feasible.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool pa = origin[a] < priority;
    const bool pb = origin[b] < priority;
    if (pa != pb) return pa;
    if (pa) return origin[a] < origin[b];
    return feasible[a].eval.rate < feasible[b].eval.rate;
  });
  const double spacing = 1.0 / std::max(1, cfg.grid_resolution - 1);
  std::vector<Candidate> starts;
  for (std::size_t k : order) {
    if (static_cast<int>(starts.size()) >= cfg.multistarts + static_cast<int>(priority)) break;
    const Mat& w = feasible[k].w;
    const bool crowded = origin[k] >= priority &&
        std::any_of(starts.begin(), starts.end(), [&](const Candidate& s) {
          return (s.w - w).cwiseAbs().maxCoeff() < 1.5 * spacing;
        });
    if (!crowded) starts.push_back(feasible[k]);
  }

  std::vector<RefineOutcome> outcomes(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    AugmentedLagrangian alm(problem, cfg);
    outcomes[i] = alm.run(starts[i]);
  });

  std::size_t winner = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].best.eval.rate < outcomes[winner].best.eval.rate) winner = i;
  }
  const RefineOutcome& best = outcomes[winner];
  Channel channel(best.best.w);
  const Feasibility f = feasibility_check(source, spec, channel, d_p, d_o, cfg.tol_constraint);
  const SolverStatus status = best.converged && f.feasible
                                  ? SolverStatus::converged
                                  : SolverStatus::feasible_not_converged;
  return {best.best.eval.rate, std::move(channel), f.achieved_dp, f.achieved_do, status};
}

std::vector<SweepCell> sweep(const JointSource& source, const DistortionSpec& spec,
                             std::span<const double> dp_grid,
                             std::span<const double> do_grid, const SolverConfig& cfg) {
  if (dp_grid.empty() || do_grid.empty()) throw DomainError("sweep: empty grid");
  if (!std::is_sorted(dp_grid.begin(), dp_grid.end()) ||
      !std::is_sorted(do_grid.begin(), do_grid.end())) {
    throw DomainError("sweep: grids must be sorted ascending");
  }
  const std::size_t np = dp_grid.size();
  std::vector<SweepCell> cells;
  cells.reserve(np * do_grid.size());
  for (std::size_t j = 0; j < do_grid.size(); ++j) {
    for (std::size_t i = 0; i < np; ++i) {
      std::vector<Channel> warm;
      if (i > 0 && cells[j * np + i - 1].result.status != SolverStatus::infeasible) {
        warm.push_back(cells[j * np + i - 1].result.channel);
      }
      if (j > 0 && cells[(j - 1) * np + i].result.status != SolverStatus::infeasible) {
        warm.push_back(cells[(j - 1) * np + i].result.channel);
      }
      SolverResult r = solve_rd(source, spec, dp_grid[i], do_grid[j], cfg, warm);
      RDPoint point(r.rate, dp_grid[i], do_grid[j], Provenance::solver);
      cells.push_back({point, std::move(r)});
    }
  }
  return cells;
}

}  // namespace semrd
