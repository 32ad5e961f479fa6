// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero only for
// failures outside the documented unattainable set below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gramsel/cli.h"
#include "gramsel/greedy.h"
#include "gramsel/oracle.h"
#include "gramsel/random.h"
#include "json.hpp"

namespace {

using namespace gramsel;
using nlohmann::json;

struct Outcome {
  bool pass;
  std::string detail;
};

// Criteria the code implements faithfully but cannot meet; see the decisions ledger.
const std::set<int> kUnattainable = {
    1,  // middle lambda_min gain computes to 0.032485, printed as 0.033
    4,  // -tr W^-1 is not submodular; the sampler finds genuine violations
};

double rel_fro(const Eigen::MatrixXd& x, const Eigen::MatrixXd& ref) {
  return (x - ref).norm() / std::max(ref.norm(), 1e-300);
}

Eigen::MatrixXd normal_matrix(Rng& rng, int r, int c) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  }
  return m;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto r = counterexample_check();
  const double d1 = std::abs(r.gain_b3_given_b1 - kCounterexampleB3GivenB1);
  const double d2 = std::abs(r.gain_b3_given_b1b2 - kCounterexampleB3GivenB1B2);
  const double d3 = std::abs(r.gain_b3_given_b2 - kCounterexampleB3GivenB2);
  const bool ok = d1 <= kCounterexampleTolerance && d2 <= kCounterexampleTolerance &&
                  d3 <= kCounterexampleTolerance && r.violated;
  std::ostringstream s;
  s.precision(6);
  s << std::fixed << "gains " << r.gain_b3_given_b1 << ", " << r.gain_b3_given_b1b2 << ", " << r.gain_b3_given_b2
    << " vs 0.037, 0.033, 0.001 (misses " << std::scientific << std::setprecision(2) << d1 << ", " << d2 << ", "
    << d3 << "), violated=" << (r.violated ? "true" : "false");
  return {ok, s.str()};
}

Outcome criterion2() {
  double worst_residual = 0.0, worst_quad = 0.0;
  int quad_checks = 0;
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + (i * 7) % 50;
    const LtiSystem sys = random_stable_system(n, 0, 2000 + i);
    Rng rng(3000 + i);
    const Eigen::MatrixXd b = normal_matrix(rng, n, 1 + i % 3);
    const Eigen::MatrixXd bbt = b * b.transpose();
    const Gramian w = solve_lyapunov(sys.a(), bbt);
    worst_residual = std::max(worst_residual, lyapunov_residual(sys.a(), w.matrix(), bbt) / std::max(1.0, bbt.norm()));
    if (n <= 8 && quad_checks < 10) {
      ++quad_checks;
      worst_quad = std::max(worst_quad, rel_fro(w.matrix(), quadrature_gramian(sys.a(), b).matrix()));
    }
  }
  const bool ok = worst_residual <= 1e-8 && worst_quad <= 1e-6 && quad_checks == 10;
  return {ok, fmt("max scaled residual %.2e, max quadrature rel diff %.2e over %.0f systems", worst_residual,
                  worst_quad, quad_checks)};
}

Outcome criterion3() {
  double worst_add = 0.0, worst_eig = std::numeric_limits<double>::infinity();
  int pairs = 0;
  for (int s = 0; s < 20; ++s) {
    const int n = 3 + s % 10;
    const LtiSystem sys = random_stable_system(n, n, 4000 + s);
    const GramianCache cache(sys);
    Rng rng(5000 + s);
    for (int p = 0; p < 10; ++p, ++pairs) {
      std::vector<int> big, small;
      for (int i = 0; i < n; ++i) {
        if (rng.uniform() < 0.6) {
          big.push_back(i);
          if (rng.uniform() < 0.5) small.push_back(i);
        }
      }
      Eigen::MatrixXd b_big(n, big.size());
      for (std::size_t j = 0; j < big.size(); ++j) b_big.col(j) = sys.candidates()[big[j]].column;
      const Eigen::MatrixXd w_big = cache.gramian_of(big).matrix();
      if (!big.empty()) {
        worst_add = std::max(worst_add, rel_fro(w_big, solve_lyapunov(sys.a(), b_big * b_big.transpose()).matrix()));
      }
      const Eigen::MatrixXd diff = w_big - cache.gramian_of(small).matrix();
      const double scale = std::max(1.0, w_big.norm());
      const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(diff, Eigen::EigenvaluesOnly).eigenvalues()(0);
      worst_eig = std::min(worst_eig, min_eig / scale);
    }
  }
  const bool ok = worst_add <= 1e-8 && worst_eig >= -1e-10 && pairs >= 200;
  return {ok, fmt("max additivity rel diff %.2e, min scaled eigenvalue of W_S2 - W_S1 %.2e over %.0f nested pairs",
                  worst_add, worst_eig, pairs)};
}

Outcome criterion4() {
  std::ostringstream s;
  bool ok = true;
  std::size_t inv_viol = 0, logdet_viol = 0, rank_viol = 0;
  long min_trials = 1L << 40;
  double trace_dev = 0.0;
  std::vector<int> inv_seeds;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int n = 3 + static_cast<int>(seed % 8);
    const LtiSystem sys = random_stable_system(n, n, seed);
    const GramianCache cache(sys);
    const auto inv = submodularity_sampler(cache, Metric::of(MetricKind::kTraceInverse), 1000, seed);
    const auto ld = submodularity_sampler(cache, Metric::of(MetricKind::kLogDet), 1000, seed);
    const auto rk = submodularity_sampler(cache, Metric::of(MetricKind::kRank), 1000, seed);
    const auto tr = submodularity_sampler(cache, Metric::of(MetricKind::kTrace), 1000, seed);
    if (!inv.violations.empty()) inv_seeds.push_back(static_cast<int>(seed));
    inv_viol += inv.violations.size();
    logdet_viol += ld.violations.size();
    rank_viol += rk.violations.size();
    min_trials = std::min({min_trials, inv.trials, ld.trials, rk.trials});
    trace_dev = std::max(trace_dev, tr.max_abs_deficit);
    if (!tr.violations.empty()) ok = false;
  }
  const LtiSystem cx = counterexample_system();
  const GramianCache cx_cache(cx);
  const auto lmin = exhaustive_submodularity(cx_cache, Metric::of(MetricKind::kLambdaMin));
  ok = ok && inv_viol == 0 && logdet_viol == 0 && rank_viol == 0 && trace_dev <= 1e-9 && min_trials >= 1000 &&
       !lmin.violations.empty();
  s << "violations: trace-inv " << inv_viol;
  if (!inv_seeds.empty()) {
    s << " (seeds";
    for (int x : inv_seeds) s << ' ' << x;
    s << ")";
  }
  s << ", logdet " << logdet_viol << ", rank " << rank_viol << "; trace modularity deviation "
    << fmt("%.1e", trace_dev) << "; min valid trials " << min_trials << "; lambda-min exhaustive violations "
    << lmin.violations.size();
  return {ok, s.str()};
}

Outcome criterion5() {
  bool ok = true;
  double worst_ratio = 1e300;
  int certified_checks = 0, certified_misses = 0;
  for (int s = 1; s <= 20; ++s) {
    const int n = 4 + s % 7;
    const int k = 2 + s % 3;
    const LtiSystem sys = random_stable_system(n, n, 6000 + s);
    const GramianCache cache(sys);
    const auto greedy = greedy_select({&cache, Metric::of(MetricKind::kRank), k});
    const ScoreTable t = brute_force(cache, Metric::of(MetricKind::kRank), k);
    const double ratio = greedy.value.value() / t.values[t.optimum].value();
    worst_ratio = std::min(worst_ratio, ratio / greedy_bound(k));
    if (ratio < greedy_bound(k)) ok = false;

    for (MetricKind kind : {MetricKind::kLogDet, MetricKind::kTraceInverse}) {
      const Metric metric = Metric::of(kind);
      const ScoreTable tt = brute_force(cache, metric, k);
      if (std::any_of(tt.values.begin(), tt.values.end(), [](MetricValue v) { return !v.is_finite(); })) continue;
      const auto r = greedy_select({&cache, metric, k});
      ++certified_checks;
      if (!r.certified_upper_bound || *r.certified_upper_bound < tt.values[tt.optimum].value()) {
        ok = false;
        ++certified_misses;
      }
    }
  }
  return {ok && certified_checks > 0,
          fmt("min rank ratio / bound %.3f over 20 instances; certified bound checked on %.0f instances, %.0f below "
              "the optimum",
              worst_ratio, certified_checks, certified_misses)};
}

Outcome criterion6() {
  const auto dir = std::filesystem::temp_directory_path() / "gramsel_acceptance";
  std::filesystem::create_directories(dir);
  int good = 0;
  bool rows_ok = true;
  std::ostringstream s;
  s << "percentiles:";
  for (int seed = 1; seed <= 5; ++seed) {
    const std::string sys = (dir / ("rand25_" + std::to_string(seed) + ".json")).string();
    std::ostringstream out, err;
    cli::run({"randsys", "--n", "25", "--seed", std::to_string(seed), "--out", sys}, out, err);
    std::vector<std::string> args{"brute", "--system", sys, "--metric", "logdet", "--k", "7", "--two-stage"};
    const std::string csv = (dir / "scores.csv").string();
    if (seed == 1) {
      args.push_back("--emit-histogram");
      args.push_back(csv);
    }
    std::ostringstream summary;
    if (cli::run(args, summary, err) != cli::kOk) return {false, "brute failed: " + err.str()};
    const json d = json::parse(summary.str());
    if (d["rows"].get<long>() != 480700) rows_ok = false;
    if (seed == 1) {
      std::ifstream in(csv);
      long lines = 0;
      for (std::string line; std::getline(in, line);) ++lines;
      if (lines != 480701) rows_ok = false;
    }
    const double p = d["percentile"].get<double>();
    if (p >= 0.99) ++good;
    s << fmt(" %.5f", p);
  }
  s << "; rows " << (rows_ok ? "480700 each" : "WRONG") << "; " << good << "/5 seeds at >= 99%";
  std::filesystem::remove_all(dir);
  return {rows_ok && good >= 4, s.str()};
}

Outcome criterion7() {
  const auto pairs = binomial_exact(74, 2);
  const double combos = binomial(2701, 10);
  // synthetic grid-sized instance: 100 random pair-difference candidates e_i - e_j
  const int n = 74;
  const LtiSystem base = random_stable_system(n, 0, 74);
  Rng rng(2701);
  std::vector<CandidateActuator> cands;
  std::set<std::pair<int, int>> used;
  while (cands.size() < 100) {
    const int i = static_cast<int>(rng.below(n));
    const int j = static_cast<int>(rng.below(n));
    if (i >= j || !used.insert({i, j}).second) continue;
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
    col(i) = 1.0;
    col(j) = -1.0;
    cands.push_back({"p" + std::to_string(i + 1) + "_" + std::to_string(j + 1), col});
  }
  const LtiSystem sys(base.a(), Eigen::MatrixXd(n, 0), std::move(cands));
  const auto t0 = std::chrono::steady_clock::now();
  const GramianCache cache(sys);
  const auto r = greedy_select({&cache, Metric::of(MetricKind::kLogDet), 10, RankPolicy{}, true});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = pairs && to_string_u128(*pairs) == "2701" && std::abs(combos / 5.6e27 - 1.0) <= 0.02 &&
                  r.selected.size() == 10 && secs < 300.0;
  std::ostringstream s;
  s << "C(74,2) = " << (pairs ? to_string_u128(*pairs) : "overflow") << ", C(2701,10) = " << fmt("%.4e", combos)
    << fmt(" (%.2f%% from 5.6e27)", 100.0 * (combos / 5.6e27 - 1.0)) << "; n=74 M=100 k=10 two-stage logdet in "
    << fmt("%.1f s, rank %.0f", secs, r.rank);
  return {ok, s.str()};
}

// Composite Simpson of a scalar function on [0, t] with panel doubling.
double simpson(const std::function<double(double)>& f, double t, double rel_tol) {
  auto rule = [&](int m) {
    const double h = t / m;
    double acc = f(0.0) + f(t);
    for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return acc * h / 3.0;
  };
  double prev = rule(64);
  for (int m = 128; m <= (1 << 22); m *= 2) {
    const double next = rule(m);
    if (std::abs(next - prev) <= rel_tol * std::abs(next)) return next;
    prev = next;
  }
  return prev;
}

Outcome criterion8() {
  struct Case {
    Eigen::MatrixXd a, b;
    Eigen::VectorXd x_f;
    double t;
  };
  std::vector<Case> cases;
  cases.push_back({Eigen::MatrixXd::Constant(1, 1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0),
                   Eigen::VectorXd::Constant(1, 1.0), 1.0});
  cases.push_back({Eigen::MatrixXd::Constant(1, 1, -2.0), Eigen::MatrixXd::Constant(1, 1, 0.5),
                   Eigen::VectorXd::Constant(1, 3.0), 1.5});
  Eigen::MatrixXd a2(2, 2), b2(2, 1);
  a2 << -1, 1, 0, -2;
  b2 << 0, 1;
  cases.push_back({a2, b2, Eigen::Vector2d(1.0, -0.5), 2.0});
  Eigen::MatrixXd a3(2, 2);
  a3 << 0, 1, -1, 0;  // oscillator, not asymptotically stable
  cases.push_back({a3, b2, Eigen::Vector2d(-2.0, 1.0), 3.0});

  double worst_end = 0.0, worst_energy = 0.0;
  for (const Case& c : cases) {
    const EnergyControl ctl = min_energy_input(c.a, c.b, c.t, c.x_f);
    const SimulationResult sim = simulate_min_energy(ctl);
    worst_end = std::max(worst_end, (sim.endpoint - c.x_f).norm() / std::max(1.0, c.x_f.norm()));
    const double realized = simpson([&](double tau) { return ctl.input(tau).squaredNorm(); }, c.t, 1e-12);
    const double predicted = c.x_f.dot(ctl.gramian.ldlt().solve(c.x_f));
    worst_energy = std::max(worst_energy, std::abs(realized - predicted) / std::abs(predicted));
  }

  // H2: tr(C W C^T) against int_0^T ||C e^{A s} B||_F^2 ds
  double worst_h2 = 0.0;
  for (int s = 0; s < 5; ++s) {
    const int n = 2 + s;
    const LtiSystem sys = random_stable_system(n, 0, 8000 + s);
    Rng rng(8100 + s);
    const Eigen::MatrixXd b = normal_matrix(rng, n, 2);
    const Eigen::MatrixXd c = normal_matrix(rng, 1 + s % 2, n);
    const double h2 = h2_norm_sq(solve_lyapunov(sys.a(), b * b.transpose()), c);
    const double horizon = 40.0 / std::abs(sys.abscissa());
    const double quad = simpson(
        [&](double tau) { return (c * (sys.a() * tau).exp() * b).squaredNorm(); }, horizon, 1e-11);
    worst_h2 = std::max(worst_h2, std::abs(h2 - quad) / std::abs(quad));
  }
  const bool ok = worst_end <= 1e-6 && worst_energy <= 1e-6 && worst_h2 <= 1e-6;
  return {ok, fmt("max scaled endpoint error %.2e, max energy rel diff %.2e, max H2 rel diff %.2e", worst_end,
                  worst_energy, worst_h2)};
}

Outcome criterion9() {
  int fixtures = 0, mismatches = 0;
  auto compare = [&](const GramianCache& cache, MetricKind kind, int k, bool two_stage) {
    const SelectionProblem p{&cache, Metric::of(kind), k, RankPolicy{}, two_stage};
    ++fixtures;
    if (lazy_greedy(p).indices != greedy_select(p).indices) ++mismatches;
  };
  const LtiSystem diag(Eigen::Vector3d(-1, -2, -3).asDiagonal().toDenseMatrix(), Eigen::MatrixXd(3, 0),
                       unit_candidates(3));
  const GramianCache diag_cache(diag);
  for (MetricKind kind : {MetricKind::kTrace, MetricKind::kRank}) compare(diag_cache, kind, 2, false);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LtiSystem sys = random_stable_system(10, 10, seed);
    const GramianCache cache(sys);
    for (MetricKind kind : {MetricKind::kTrace, MetricKind::kRank, MetricKind::kTracePinv,
                            MetricKind::kLogProdNonzero}) {
      compare(cache, kind, 5, false);
    }
    for (MetricKind kind : {MetricKind::kLogDet, MetricKind::kTraceInverse, MetricKind::kNthRootLogDet}) {
      compare(cache, kind, 5, true);
    }
  }
  const LtiSystem big = random_stable_system(25, 25, 1);
  const GramianCache big_cache(big);
  const SelectionProblem p{&big_cache, Metric::of(MetricKind::kLogDet), 7, RankPolicy{}, true};
  const auto lazy = lazy_greedy(p);
  const auto plain = greedy_select(p);
  ++fixtures;
  if (lazy.indices != plain.indices) ++mismatches;
  const bool ok = mismatches == 0 && lazy.evaluations < 25 * 7;
  return {ok, fmt("%.0f fixtures, %.0f sequence mismatches; n=25 lazy evaluations %.0f", fixtures, mismatches,
                  static_cast<double>(lazy.evaluations)) +
                  " vs M*k = 175, plain " + std::to_string(plain.evaluations)};
}

}  // namespace

int main() {
  const std::vector<std::pair<Outcome (*)(), double>> criteria = {
      {criterion1, 1.0},  {criterion2, 30.0},  {criterion3, 0.0},  {criterion4, 0.0},  {criterion5, 0.0},
      {criterion6, 600.0}, {criterion7, 300.0}, {criterion8, 0.0}, {criterion9, 0.0},
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].first();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double limit = criteria[i].second;
    if (limit > 0.0 && secs >= limit) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s limit", limit);
    }
    const bool known = !o.pass && kUnattainable.count(id);
    if (!o.pass && !known) ++unexpected;
    std::printf("criterion %d: %s%s (%.2f s) %s\n", id, o.pass ? "PASS" : "FAIL", known ? " [known unattainable]" : "",
                secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d unexpected failure(s)\n", unexpected);
  return unexpected == 0 ? 0 : 1;
}
