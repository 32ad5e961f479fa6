#include "gramsel/cli.h"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gramsel/errors.h"
#include "gramsel/greedy.h"
#include "gramsel/oracle.h"
#include "gramsel/report.h"

namespace gramsel::cli {

using nlohmann::json;

namespace {

struct Options {
  std::string system;
  std::string metric = "logdet";
  std::string q_path;
  int k = 1;
  std::uint64_t seed = 1;
  long trials = 1000;
  bool two_stage = false;
  bool single_stage = false;
  bool lazy = false;
  bool exhaustive = false;
  bool json_output = false;
  bool tamper = false;
  double rank_tol = 1e-10;
  double horizon = 1.0;
  double margin = 0.5;
  int n = 0;
  int candidates = -1;
  int samples = 11;
  std::string target;
  std::string out;
  std::string histogram;
  std::string volume_mode = "standard";
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ValidationError("cannot write " + path);
    }
    stream_ = file_ ? file_.get() : &fallback;
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

RankPolicy policy_of(const Options& o) {
  RankPolicy p;
  p.rel_tol = o.rank_tol;
  p.validate();
  return p;
}

Eigen::MatrixXd read_matrix_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_array() || doc.empty() || !doc[0].is_array()) throw ParseError(path + ": expected an array of rows");
  Eigen::MatrixXd m(doc.size(), doc[0].size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_array() || doc[i].size() != doc[0].size()) throw DimensionError(path + ": ragged rows");
    for (std::size_t j = 0; j < doc[i].size(); ++j) {
      if (!doc[i][j].is_number()) throw ParseError(path + ": non-numeric entry");
      m(i, j) = doc[i][j].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd read_vector_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError(path + ": expected an array of numbers");
  Eigen::VectorXd v(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_number()) throw ParseError(path + ": non-numeric entry");
    v(i) = doc[i].get<double>();
  }
  return v;
}

Metric metric_of(const Options& o) {
  if (o.metric == "weighted-logdet") {
    if (o.q_path.empty()) throw ValidationError("weighted-logdet needs --q PATH");
    return Metric::weighted_log_det(read_matrix_json(o.q_path));
  }
  return Metric::parse(o.metric);
}

LtiSystem system_of(const Options& o, Stability stability = Stability::kRequire) {
  if (o.system == "counterexample") return counterexample_system();
  if (o.system.empty()) throw ValidationError("--system is required");
  return load_system_file(o.system, stability);
}

VolumeMode volume_mode_of(const Options& o) {
  if (o.volume_mode == "standard") return VolumeMode::kStandardSqrt;
  if (o.volume_mode == "paper") return VolumeMode::kPaperNthRoot;
  throw ValidationError("--volume-mode must be 'standard' or 'paper'");
}

// Strict metrics run two-stage unless --single-stage is given.
bool use_two_stage(const Options& o, const Metric& metric) {
  if (o.two_stage && !is_strict(metric.kind())) {
    throw ValidationError("--two-stage needs trace-inv, logdet, nthroot-logdet or weighted-logdet");
  }
  return is_strict(metric.kind()) && !o.single_stage;
}

SelectionResult select(const SelectionProblem& problem, bool lazy) {
  return lazy ? lazy_greedy(problem) : greedy_select(problem);
}

int cmd_randsys(const Options& o, std::ostream& out) {
  const int m = o.candidates < 0 ? o.n : o.candidates;
  const LtiSystem sys = random_stable_system(o.n, m, o.seed, o.margin);
  Output dst(o.out, out);
  *dst << save_system_json(sys) << '\n';
  return kOk;
}

int cmd_place(const Options& o, std::ostream& out) {
  const LtiSystem sys = system_of(o);
  const Metric metric = metric_of(o);
  const GramianCache cache(sys);
  const SelectionProblem problem{&cache, metric, o.k, policy_of(o), use_two_stage(o, metric)};
  const SelectionResult result = select(problem, o.lazy);
  json doc = selection_json(result, problem);
  doc["volume"] = ellipsoid_volume(cache.gramian_of(result.indices), volume_mode_of(o), problem.policy);
  doc["volume_mode"] = o.volume_mode;
  Output dst(o.out, out);
  *dst << doc.dump(2) << '\n';
  return result.controllable ? kOk : kUncontrollable;
}

int cmd_counterexample(const Options& o, std::ostream& out) {
  CounterexampleRecord r;
  if (o.tamper) {
    // A(0,0) moved from -8 to -4; still stable, but the gains no longer match
    LtiSystem base = counterexample_system();
    Eigen::MatrixXd a = base.a();
    a(0, 0) = -4.0;
    r = counterexample_check(LtiSystem(a, base.base_columns(), base.candidates()));
  } else {
    r = counterexample_check();
  }
  const bool match = std::abs(r.gain_b3_given_b1 - kCounterexampleB3GivenB1) <= kCounterexampleTolerance &&
                     std::abs(r.gain_b3_given_b1b2 - kCounterexampleB3GivenB1B2) <= kCounterexampleTolerance &&
                     std::abs(r.gain_b3_given_b2 - kCounterexampleB3GivenB2) <= kCounterexampleTolerance &&
                     r.violated;
  Output dst(o.out, out);
  if (o.json_output) {
    json doc = counterexample_json(r);
    doc["matches_reference"] = match;
    *dst << doc.dump(2) << '\n';
  } else {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "lambda_min gains (reference +/- %.4f)\n"
                  "  Delta(b3 | {b1})     = %.6f  (reference %.3f)\n"
                  "  Delta(b3 | {b1,b2})  = %.6f  (reference %.3f)\n"
                  "  Delta(b3 | {b2})     = %.6f  (reference %.3f)\n"
                  "  diminishing gains violated: %s\n"
                  "  matches reference: %s\n",
                  kCounterexampleTolerance, r.gain_b3_given_b1, kCounterexampleB3GivenB1, r.gain_b3_given_b1b2,
                  kCounterexampleB3GivenB1B2, r.gain_b3_given_b2, kCounterexampleB3GivenB2,
                  r.violated ? "true" : "false", match ? "yes" : "no");
    *dst << buf;
  }
  return match ? kOk : kCounterexampleMismatch;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const LtiSystem sys = system_of(o);
  const Metric metric = metric_of(o);
  const GramianCache cache(sys);
  const RankPolicy policy = policy_of(o);
  const bool exhaustive = o.exhaustive || metric.kind() == MetricKind::kLambdaMin;
  const ViolationReport report = exhaustive ? exhaustive_submodularity(cache, metric, policy)
                                            : submodularity_sampler(cache, metric, o.trials, o.seed, policy);
  json doc = violation_json(report, sys);
  bool pass;
  if (metric.kind() == MetricKind::kLambdaMin) {
    doc["mode"] = "expect-violation";
    pass = !report.violations.empty();
  } else if (metric.kind() == MetricKind::kTrace) {
    doc["mode"] = "modularity";
    pass = report.violations.empty() && report.max_abs_deficit <= 1e-9;
  } else {
    doc["mode"] = "submodularity";
    pass = report.violations.empty();
  }
  doc["pass"] = pass;
  Output dst(o.out, out);
  *dst << doc.dump(2) << '\n';
  return pass ? kOk : kVerificationFailed;
}

int cmd_brute(const Options& o, std::ostream& out) {
  const LtiSystem sys = system_of(o);
  const Metric metric = metric_of(o);
  const GramianCache cache(sys);
  const SelectionProblem problem{&cache, metric, o.k, policy_of(o), use_two_stage(o, metric)};
  const ScoreTable table = brute_force(cache, metric, o.k, problem.policy);
  const SelectionResult greedy = select(problem, o.lazy);

  if (!o.histogram.empty()) {
    std::ofstream csv(o.histogram);
    if (!csv) throw ValidationError("cannot write " + o.histogram);
    write_score_csv(table, sys, csv);
  }

  // greedy's own row, so the comparison uses the table's summation order
  std::vector<int> sorted = greedy.indices;
  std::sort(sorted.begin(), sorted.end());
  MetricValue f_greedy = greedy.value;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (table.subset(r) == sorted) {
      f_greedy = table.values[r];
      break;
    }
  }
  const MetricValue f_opt = table.values[table.optimum];
  double f_min = std::numeric_limits<double>::infinity();
  long below = 0;
  for (const MetricValue v : table.values) {
    if (v.is_finite()) f_min = std::min(f_min, v.value());
    if (v < f_greedy) ++below;
  }

  json summary;
  summary["metric"] = std::string(metric.name());
  summary["k"] = o.k;
  summary["rows"] = table.rows();
  summary["greedy_selected"] = greedy.selected;
  summary["greedy_value"] = extended_json(f_greedy);
  json opt_ids = json::array();
  for (int i : table.subset(table.optimum)) opt_ids.push_back(sys.candidates()[i].id);
  summary["optimum_selected"] = std::move(opt_ids);
  summary["optimum_value"] = extended_json(f_opt);
  summary["percentile"] = static_cast<double>(below) / static_cast<double>(table.rows());
  if (std::isfinite(f_min) && f_greedy.is_finite()) {
    summary["shift"] = f_min;
    const double span = f_opt.value() - f_min;
    summary["shifted_ratio"] = span > 0.0 ? (f_greedy.value() - f_min) / span : 1.0;
    summary["raw_ratio"] = f_opt.value() != 0.0 ? f_greedy.value() / f_opt.value() : 1.0;
    summary["volume_ratio"] = std::exp(0.5 * (f_greedy.value() - f_opt.value()));
  } else {
    summary["shift"] = nullptr;
    summary["shifted_ratio"] = nullptr;
    summary["raw_ratio"] = nullptr;
    summary["volume_ratio"] = nullptr;
  }
  Output dst(o.out, out);
  *dst << summary.dump(2) << '\n';
  return kOk;
}

int cmd_energy(const Options& o, std::ostream& out) {
  // a finite horizon needs no stability
  const LtiSystem sys = system_of(o, Stability::kAllow);
  if (o.target.empty()) throw ValidationError("--target is required");
  const Eigen::VectorXd x_f = read_vector_json(o.target);
  Eigen::MatrixXd b(sys.n(), sys.base_columns().cols() + sys.num_candidates());
  b << sys.base_columns(), sys.candidate_matrix();
  const EnergyControl control = min_energy_input(sys.a(), b, o.horizon, x_f);
  const SimulationResult sim = simulate_min_energy(control);
  json samples = json::array();
  const int count = std::max(o.samples, 2);
  for (int i = 0; i < count; ++i) {
    const double tau = o.horizon * i / (count - 1);
    const Eigen::VectorXd u = control.input(tau);
    samples.push_back({{"tau", tau}, {"u", std::vector<double>(u.data(), u.data() + u.size())}});
  }
  json doc;
  doc["horizon"] = o.horizon;
  doc["energy"] = control.energy;
  doc["endpoint_error"] = (sim.endpoint - x_f).norm();
  doc["simulation_steps"] = sim.steps;
  doc["samples"] = std::move(samples);
  Output dst(o.out, out);
  *dst << doc.dump(2) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Actuator selection by greedy maximization of controllability-Gramian metrics", "gramsel"};
  app.require_subcommand(1);
  Options o;

  auto add_system = [&](CLI::App* c) { c->add_option("--system", o.system, "System file (.json or CSV pair)"); };
  auto add_metric = [&](CLI::App* c) {
    c->add_option("--metric", o.metric,
                  "trace, trace-inv, trace-pinv, logdet, logprod, rank, lambda-min, nthroot-logdet, "
                  "weighted-logdet");
    c->add_option("--q", o.q_path, "Weight matrix Q (JSON rows) for weighted-logdet");
    c->add_option("--rank-tol", o.rank_tol, "Relative numerical-rank tolerance");
  };
  auto add_selection = [&](CLI::App* c) {
    c->add_option("--k", o.k, "Number of actuators")->required();
    c->add_flag("--two-stage", o.two_stage, "Rank-first two-stage greedy (default for strict metrics)");
    c->add_flag("--single-stage", o.single_stage, "Plain greedy even for strict metrics");
    c->add_flag("--lazy", o.lazy, "Lazy greedy evaluation");
  };

  CLI::App* randsys = app.add_subcommand("randsys", "Generate a random stable system");
  randsys->add_option("--n", o.n, "State dimension")->required();
  randsys->add_option("--seed", o.seed, "Seed");
  randsys->add_option("--candidates", o.candidates, "Number of unit-vector candidates (default n)");
  randsys->add_option("--margin", o.margin, "Stability margin");
  randsys->add_option("--out", o.out, "Output path");

  CLI::App* place = app.add_subcommand("place", "Greedy actuator placement");
  add_system(place);
  add_metric(place);
  add_selection(place);
  place->add_option("--volume-mode", o.volume_mode, "standard or paper");
  place->add_option("--out", o.out, "Output path");

  CLI::App* counter = app.add_subcommand("counterexample", "Reproduce the lambda_min counterexample");
  counter->add_flag("--json", o.json_output, "Machine-readable output");
  counter->add_flag("--tamper", o.tamper, "Perturb A to exercise the mismatch path");
  counter->add_option("--out", o.out, "Output path");

  CLI::App* verify = app.add_subcommand("verify", "Empirical submodularity / modularity check");
  add_system(verify);
  add_metric(verify);
  verify->add_option("--trials", o.trials, "Sampled triples");
  verify->add_option("--seed", o.seed, "Seed");
  verify->add_flag("--exhaustive", o.exhaustive, "Check every triple (pools of at most 12)");
  verify->add_option("--out", o.out, "Output path");

  CLI::App* brute = app.add_subcommand("brute", "Exhaustive search and greedy comparison");
  add_system(brute);
  add_metric(brute);
  add_selection(brute);
  brute->add_option("--emit-histogram", o.histogram, "CSV of every subset score");
  brute->add_option("--out", o.out, "Summary output path");

  CLI::App* energy = app.add_subcommand("energy", "Minimum-energy input to a target state");
  add_system(energy);
  energy->add_option("--horizon", o.horizon, "Transfer time t");
  energy->add_option("--target", o.target, "Target state x_f (JSON array)")->required();
  energy->add_option("--samples", o.samples, "Number of u*(tau) samples");
  energy->add_option("--out", o.out, "Output path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "gramsel: " << e.what() << '\n';
    return kInvalidInput;
  }

  try {
    if (*randsys) return cmd_randsys(o, out);
    if (*place) return cmd_place(o, out);
    if (*counter) return cmd_counterexample(o, out);
    if (*verify) return cmd_verify(o, out);
    if (*brute) return cmd_brute(o, out);
    if (*energy) return cmd_energy(o, out);
  } catch (const ValidationError& e) {
    err << "gramsel: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const EnumerationLimitError& e) {
    err << "gramsel: " << e.what() << '\n';
    return kEnumerationLimit;
  } catch (const SamplingExhaustedError& e) {
    err << "gramsel: " << e.what() << '\n';
    return kSamplingExhausted;
  } catch (const NumericalError& e) {
    err << "gramsel: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kInvalidInput;
}

}  // namespace gramsel::cli
