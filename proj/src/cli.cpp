#include "semrd/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "semrd/binary_rd.hpp"
#include "semrd/io.hpp"
#include "semrd/pfr_codec.hpp"
#include "semrd/solver.hpp"

namespace semrd {

namespace {

using nlohmann::ordered_json;

constexpr double kLn2 = 0.69314718055994530942;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string source_path;
  std::string channel_path;
  std::optional<double> q;
  double rho = 0.5;
  std::optional<double> dp;
  std::optional<double> d_o;
  std::string dp_grid;
  std::string do_grid;
  std::string semantic = "tv";
  std::string symbolic = "hamming";
  std::string units = "bits";
  std::string out_path;
  Index n = 1;
  std::size_t trials = 1000;
  std::size_t max_proposals = PfrConfig{}.max_proposals;
  SolverConfig solver;
  std::vector<std::string> argv;
};

std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double unit_scale(const Options& o) { return o.units == "nats" ? kLn2 : 1.0; }

struct SourceChoice {
  JointSource source;
  std::optional<BinarySourceSpec> binary;  // set on the doubly symmetric family
};

SourceChoice resolve_source(const Options& o) {
  if (!o.source_path.empty() && o.q) {
    throw UsageError("give either --source or --q, not both");
  }
  if (!o.source_path.empty()) {
    JointSource src = load_source(o.source_path);
    double q;
    if (match_doubly_symmetric(src, &q)) return {src, BinarySourceSpec::symmetric(q)};
    return {src, std::nullopt};
  }
  if (!o.q) throw UsageError("a source is required: --source <json> or --q");
  const BinarySourceSpec spec(o.rho, *o.q, *o.q);
  std::optional<BinarySourceSpec> binary;
  if (spec.doubly_symmetric()) binary = spec;
  return {spec.joint_source(), binary};
}

void check_bound(double v, const char* flag) {
  if (!(v >= 0)) throw UsageError(std::string(flag) + " must be nonnegative");
}

std::vector<double> axis(const std::optional<double>& single, const std::string& grid,
                         const char* flag, const char* grid_flag) {
  std::vector<double> out;
  if (single && !grid.empty()) {
    throw UsageError(std::string("give either ") + flag + " or " + grid_flag);
  }
  if (single) {
    out = {*single};
  } else if (!grid.empty()) {
    try {
      out = parse_grid(grid);
    } catch (const ParseError& e) {
      throw UsageError(e.what());
    }
  } else {
    throw UsageError(std::string("missing ") + flag + " or " + grid_flag);
  }
  for (double v : out) check_bound(v, flag);
  return out;
}

DistortionSpec resolve_measures(const Options& o, const JointSource& source, Index ny) {
  auto known = [](const std::string& name, std::initializer_list<const char*> names) {
    if (name.starts_with("matrix:")) return true;
    return std::any_of(names.begin(), names.end(), [&](const char* n) { return name == n; });
  };
  if (!known(o.semantic, {"tv", "kl", "chi2"})) {
    throw UsageError("unknown --semantic '" + o.semantic + "'");
  }
  if (!known(o.symbolic, {"hamming", "mse"})) {
    throw UsageError("unknown --symbolic '" + o.symbolic + "'");
  }
  return {semantic_from_name(o.semantic), observation_from_name(o.symbolic, source, ny)};
}

Index output_size(const Options& o, const JointSource& source) {
  return o.solver.output_size > 0 ? o.solver.output_size : source.observation_size();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json manifest(const Options& o) {
  ordered_json m;
  m["command"] = o.command;
  m["argv"] = o.argv;
  m["source_path"] = o.source_path;
  if (o.q) {
    m["q"] = *o.q;
    m["rho"] = o.rho;
  }
  m["semantic"] = o.semantic;
  m["symbolic"] = o.symbolic;
  if (o.dp) m["dp"] = *o.dp;
  if (o.d_o) m["do"] = *o.d_o;
  if (!o.dp_grid.empty()) m["dp_grid"] = o.dp_grid;
  if (!o.do_grid.empty()) m["do_grid"] = o.do_grid;
  m["units"] = o.units;
  if (o.command == "solve" || o.command == "sweep" || o.command == "pfr-sim") {
    m["solver"] = {{"grid_resolution", o.solver.grid_resolution},
                   {"refine_iters", o.solver.refine_iters},
                   {"multistarts", o.solver.multistarts},
                   {"tol_constraint", o.solver.tol_constraint},
                   {"tol_rate", o.solver.tol_rate},
                   {"output_size", o.solver.output_size},
                   {"analytic_seed", o.solver.analytic_seed},
                   {"continuation_steps", o.solver.continuation_steps}};
  }
  if (o.command == "pfr-sim") {
    m["pfr"] = {{"n", o.n},
                {"trials", o.trials},
                {"max_proposals", o.max_proposals},
                {"channel_path", o.channel_path}};
  }
  m["output_path"] = o.out_path;
  m["seed"] = o.solver.seed;
  m["timestamp"] = utc_timestamp();
  return m;
}

void emit(const Options& o, const std::string& payload, std::ostream& out) {
  if (o.out_path.empty()) {
    out << payload;
    return;
  }
  std::ofstream f(o.out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + o.out_path);
  f << payload;
  std::ofstream mf(o.out_path + ".manifest.json", std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write " + o.out_path + ".manifest.json");
  mf << manifest(o).dump(2) << '\n';
}

int cmd_closed_form(const Options& o, std::ostream& out, std::ostream& err) {
  const SourceChoice sc = resolve_source(o);
  if (!sc.binary) {
    throw HypothesisViolated("closed form needs the doubly symmetric binary source");
  }
  const std::vector<double> dps = axis(o.dp, o.dp_grid, "--dp", "--dp-grid");
  const std::vector<double> dos = axis(o.d_o, o.do_grid, "--do", "--do-grid");
  const bool clamped = std::any_of(dps.begin(), dps.end(), [](double v) { return v > 1; }) ||
                       std::any_of(dos.begin(), dos.end(), [](double v) { return v > 1; });
  if (clamped) err << "warning: bounds above 1 are treated as 1\n";

  std::ostringstream csv;
  csv << "d_p,d_o,rate\n";
  for (double d_o : dos) {
    for (double dp : dps) {
      csv << fmt6(dp) << ',' << fmt6(d_o) << ','
          << fmt6(closed_form_rate(*sc.binary, dp, d_o) * unit_scale(o)) << '\n';
    }
  }
  emit(o, csv.str(), out);
  return kExitOk;
}

void write_row(std::ostream& csv, double dp, double d_o, const SolverResult& r,
               const Options& o) {
  csv << fmt6(dp) << ',' << fmt6(d_o) << ',' << fmt6(r.rate * unit_scale(o)) << ','
      << fmt6(r.achieved_dp) << ',' << fmt6(r.achieved_do) << ',' << to_string(r.status)
      << ',' << o.solver.seed << '\n';
}

std::string solver_header(const Options& o) {
  return "d_p,d_o,rate_" + o.units + ",achieved_dp,achieved_do,status,seed\n";
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream&) {
  if (!o.dp || !o.d_o) throw UsageError("solve needs --dp and --do");
  check_bound(*o.dp, "--dp");
  check_bound(*o.d_o, "--do");
  const SourceChoice sc = resolve_source(o);
  const DistortionSpec spec = resolve_measures(o, sc.source, output_size(o, sc.source));
  const SolverResult r = solve_rd(sc.source, spec, *o.dp, *o.d_o, o.solver);
  std::ostringstream csv;
  csv << solver_header(o);
  write_row(csv, *o.dp, *o.d_o, r, o);
  emit(o, csv.str(), out);
  return r.status == SolverStatus::infeasible ? kExitRuntime : kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream&) {
  const std::vector<double> dps = axis(o.dp, o.dp_grid, "--dp", "--dp-grid");
  const std::vector<double> dos = axis(o.d_o, o.do_grid, "--do", "--do-grid");
  const SourceChoice sc = resolve_source(o);
  const DistortionSpec spec = resolve_measures(o, sc.source, output_size(o, sc.source));
  const std::vector<SweepCell> cells = sweep(sc.source, spec, dps, dos, o.solver);
  std::ostringstream csv;
  csv << solver_header(o);
  bool any_infeasible = false;
  for (const SweepCell& c : cells) {
    write_row(csv, c.point.d_p, c.point.d_o, c.result, o);
    any_infeasible |= c.result.status == SolverStatus::infeasible;
  }
  emit(o, csv.str(), out);
  return any_infeasible ? kExitRuntime : kExitOk;
}

ordered_json matrix_json(const Matrix<double>& m) {
  ordered_json rows = ordered_json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_pfr_sim(const Options& o, std::ostream& out, std::ostream& err) {
  const SourceChoice sc = resolve_source(o);
  std::optional<Channel> channel;
  std::optional<double> closed_form;
  if (!o.channel_path.empty()) {
    if (o.dp || o.d_o) throw UsageError("give either --channel or --dp/--do");
    channel = load_channel(o.channel_path);
    check_compatible(sc.source, *channel);
  } else {
    if (!o.dp || !o.d_o) throw UsageError("pfr-sim needs --channel or both --dp and --do");
    check_bound(*o.dp, "--dp");
    check_bound(*o.d_o, "--do");
    if (sc.binary) {
      channel = optimal_channel(*sc.binary, *o.dp, *o.d_o).channel();
      closed_form = closed_form_rate(*sc.binary, *o.dp, *o.d_o);
    } else {
      const DistortionSpec spec = resolve_measures(o, sc.source, output_size(o, sc.source));
      const SolverResult r = solve_rd(sc.source, spec, *o.dp, *o.d_o, o.solver);
      if (r.status == SolverStatus::infeasible) {
        err << "error: no feasible channel for the given bounds\n";
        return kExitRuntime;
      }
      channel = r.channel;
    }
  }
  const DistortionSpec spec = resolve_measures(o, sc.source, channel->output_size());

  PfrConfig cfg;
  cfg.n = o.n;
  cfg.trials = o.trials;
  cfg.max_proposals = o.max_proposals;
  cfg.seed = o.solver.seed;
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const PfrReport r = simulate(sc.source, *channel, spec, cfg);

  ordered_json j;
  j["n"] = r.n;
  j["trials"] = r.trials;
  j["seed"] = r.seed;
  j["units"] = "bits";
  j["empirical_rate"] = r.empirical_rate;
  j["bound_rhs"] = r.bound_rhs;
  j["bound_rhs_nats_reading"] = r.bound_rhs_nats_reading;
  j["estimator_slack"] = r.estimator_slack;
  j["bound_holds"] = r.empirical_rate <= r.bound_rhs + r.estimator_slack;
  j["mutual_information"] = r.mutual_information;
  if (closed_form) {
    j["closed_form_rate"] = *closed_form;
    j["bound_minus_closed_form"] = r.bound_rhs - *closed_form;
    j["empirical_minus_closed_form"] = r.empirical_rate - *closed_form;
  }
  j["seq_do_mean"] = r.seq_do_mean;
  j["seq_do_stderr"] = r.seq_do_stderr;
  j["seq_dp_mean"] = r.seq_dp_mean;
  j["seq_dp_stderr"] = r.seq_dp_stderr;
  j["tv_joint"] = r.tv_joint;
  j["truncated_fraction"] = r.truncated_fraction;
  j["k_support"] = r.k_support;
  j["k_max"] = r.k_max;
  j["joint_counts"] = matrix_json(r.joint_counts);
  j["chi2"] = {{"statistic", r.joint_fit.statistic},
               {"dof", r.joint_fit.dof},
               {"p_value", r.joint_fit.p_value}};
  j["channel"] = matrix_json(channel->matrix());
  j["warnings"] = r.warnings;
  for (const std::string& w : r.warnings) err << "warning: " << w << '\n';
  emit(o, j.dump(2) + "\n", out);
  return kExitOk;
}

void add_source_options(CLI::App* sub, Options& o) {
  sub->add_option("--source", o.source_path, "JSON source file")->check(CLI::ExistingFile);
  sub->add_option("--q", o.q, "binary source parameter q1 = q2")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--rho", o.rho, "binary source p_S(0)")->check(CLI::Range(0.0, 1.0));
}

void add_bound_options(CLI::App* sub, Options& o, bool grids) {
  sub->add_option("--dp", o.dp, "semantic distortion bound");
  sub->add_option("--do", o.d_o, "observation distortion bound");
  if (grids) {
    sub->add_option("--dp-grid", o.dp_grid, "d_p grid a:b:n");
    sub->add_option("--do-grid", o.do_grid, "d_o grid a:b:n");
  }
}

void add_measure_options(CLI::App* sub, Options& o) {
  sub->add_option("--semantic", o.semantic, "tv | kl | chi2 | matrix:<path>");
  sub->add_option("--symbolic", o.symbolic, "hamming | mse | matrix:<path>");
}

void add_solver_options(CLI::App* sub, Options& o) {
  SolverConfig& s = o.solver;
  sub->add_option("--ysize", s.output_size, "reconstruction alphabet size (default |X|)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--grid-resolution", s.grid_resolution, "seed grid points per parameter");
  sub->add_option("--refine-iters", s.refine_iters, "outer refinement passes per start");
  sub->add_option("--multistarts", s.multistarts, "random starts");
  sub->add_option("--tol-constraint", s.tol_constraint, "constraint slack");
  sub->add_option("--tol-rate", s.tol_rate, "rate convergence tolerance");
  sub->add_option("--continuation-steps", s.continuation_steps,
                  "stages of the continuation starts (0 disables)");
  sub->add_flag("!--no-analytic-seed", s.analytic_seed,
                "do not seed with the closed-form channel on the binary family");
}

void add_common_options(CLI::App* sub, Options& o, bool seed) {
  sub->add_option("--out", o.out_path, "output file (also writes <out>.manifest.json)");
  sub->add_option("--units", o.units, "rate unit")->check(CLI::IsMember({"bits", "nats"}));
  if (seed) sub->add_option("--seed", o.solver.seed, "random seed");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  o.argv = args;
  CLI::App app{"Semantic rate-distortion toolkit", "semrd"};
  app.require_subcommand(1);

  CLI::App* cf = app.add_subcommand("closed-form", "binary closed-form R(d_p, d_o)");
  add_source_options(cf, o);
  add_bound_options(cf, o, true);
  add_common_options(cf, o, false);

  CLI::App* solve = app.add_subcommand("solve", "numerical R(d_p, d_o) at one point");
  add_source_options(solve, o);
  add_bound_options(solve, o, false);
  add_measure_options(solve, o);
  add_solver_options(solve, o);
  add_common_options(solve, o, true);

  CLI::App* sw = app.add_subcommand("sweep", "numerical R over a (d_p, d_o) grid");
  add_source_options(sw, o);
  add_bound_options(sw, o, true);
  add_measure_options(sw, o);
  add_solver_options(sw, o);
  add_common_options(sw, o, true);

  CLI::App* pfr = app.add_subcommand("pfr-sim", "simulate the Poisson functional code");
  add_source_options(pfr, o);
  add_bound_options(pfr, o, false);
  add_measure_options(pfr, o);
  add_solver_options(pfr, o);
  add_common_options(pfr, o, true);
  pfr->add_option("--channel", o.channel_path, "JSON channel file")->check(CLI::ExistingFile);
  pfr->add_option("--n", o.n, "block length")->check(CLI::PositiveNumber);
  pfr->add_option("--trials", o.trials, "independent encode/decode rounds")
      ->check(CLI::PositiveNumber);
  pfr->add_option("--max-proposals", o.max_proposals, "proposal cap per encoding");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cf->parsed()) {
      o.command = "closed-form";
      return cmd_closed_form(o, out, err);
    }
    try {
      o.solver.validate();
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
    if (solve->parsed()) {
      o.command = "solve";
      return cmd_solve(o, out, err);
    }
    if (sw->parsed()) {
      o.command = "sweep";
      return cmd_sweep(o, out, err);
    }
    o.command = "pfr-sim";
    return cmd_pfr_sim(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace semrd
