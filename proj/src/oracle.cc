#include "gramsel/oracle.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Cholesky>
#include <unsupported/Eigen/MatrixFunctions>

#include "gramsel/errors.h"
#include "gramsel/kernels.h"
#include "gramsel/random.h"

namespace gramsel {

namespace {

std::span<double> flat(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> flat(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

// ---------------------------------------------------------------------------

std::optional<unsigned __int128> binomial_exact(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  const unsigned __int128 max = ~static_cast<unsigned __int128>(0);
  for (std::uint64_t i = 0; i < k; ++i) {
    // r * (n - i) / (i + 1) is an integer at every step
    if (r > max / (n - i)) return std::nullopt;
    r = r * (n - i) / (i + 1);
  }
  return r;
}

double binomial(std::uint64_t n, std::uint64_t k) {
  if (const auto exact = binomial_exact(n, k)) return static_cast<double>(*exact);
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

std::string to_string_u128(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {s.rbegin(), s.rend()};
}

std::vector<int> ScoreTable::subset(std::size_t row) const {
  return {indices.begin() + static_cast<std::ptrdiff_t>(row * k),
          indices.begin() + static_cast<std::ptrdiff_t>((row + 1) * k)};
}

ScoreTable brute_force(const GramianCache& cache, const Metric& metric, int k, const RankPolicy& policy) {
  const int m = cache.size();
  if (k < 1 || k > m) throw ValidationError("brute_force: k must lie in [1, M]");
  const double count = binomial(m, k);
  if (count > kEnumerationLimit) {
    throw EnumerationLimitError("brute_force: C(" + std::to_string(m) + ", " + std::to_string(k) + ") = " +
                                    std::to_string(count) + " subsets exceeds the enumeration limit",
                                count);
  }
  ScoreTable table;
  table.k = k;
  table.pool = m;
  table.values.reserve(static_cast<std::size_t>(count));
  table.indices.reserve(static_cast<std::size_t>(count) * k);

  // Depth-first over combinations in lexicographic order; partial[d] holds
  // base + W of the first d chosen candidates, so each leaf costs one accumulate.
  std::vector<Eigen::MatrixXd> partial(k + 1, cache.base().matrix());
  std::vector<int> combo(k);
  for (int i = 0; i < k; ++i) combo[i] = i;
  for (int d = 0; d < k; ++d) {
    partial[d + 1] = partial[d];
    cache.add_candidate(partial[d + 1], combo[d]);
  }
  for (;;) {
    table.indices.insert(table.indices.end(), combo.begin(), combo.end());
    table.values.push_back(evaluate(metric, partial[k], policy).value);

    int pos = k - 1;
    while (pos >= 0 && combo[pos] == m - k + pos) --pos;
    if (pos < 0) break;
    ++combo[pos];
    for (int i = pos + 1; i < k; ++i) combo[i] = combo[i - 1] + 1;
    for (int d = pos; d < k; ++d) {
      partial[d + 1] = partial[d];
      cache.add_candidate(partial[d + 1], combo[d]);
    }
  }
  table.optimum = static_cast<std::size_t>(
      std::distance(table.values.begin(), std::max_element(table.values.begin(), table.values.end())));
  return table;
}

void write_score_csv(const ScoreTable& table, const LtiSystem& sys, std::ostream& out) {
  out << "subset;value\n";
  char buf[64];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (int j = 0; j < table.k; ++j) {
      if (j) out << '+';
      out << sys.candidates()[table.indices[r * table.k + j]].id;
    }
    const MetricValue v = table.values[r];
    if (v.is_neg_infinity()) {
      out << ";-inf\n";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", v.value());
      out << ';' << buf << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

struct GainPair {
  double at_a;
  double at_b;
};

class SubsetEvaluator {
 public:
  SubsetEvaluator(const GramianCache& cache, const Metric& metric, const RankPolicy& policy)
      : cache_(cache), metric_(metric), policy_(policy) {}

  Evaluation operator()(const std::vector<int>& sorted) const {
    return evaluate(metric_, cache_.gramian_of(sorted).matrix(), policy_);
  }

 private:
  const GramianCache& cache_;
  const Metric& metric_;
  const RankPolicy& policy_;
};

bool fixed_rank_only(MetricKind kind) {
  return kind == MetricKind::kTracePinv || kind == MetricKind::kLogProdNonzero;
}

std::vector<int> with(std::vector<int> s, int a) {
  s.insert(std::upper_bound(s.begin(), s.end(), a), a);
  return s;
}

enum class TripleStatus { kValid, kNegInf, kRankChange };

// Evaluates one chain and folds it into the report.
TripleStatus record_triple(ViolationReport& report, MetricKind kind, const Evaluation& fa, const Evaluation& fa_x,
                           const Evaluation& fb, const Evaluation& fb_x, const std::vector<int>& a_set,
                           const std::vector<int>& b_set, int element) {
  if (fa.value.is_neg_infinity() || fa_x.value.is_neg_infinity() || fb.value.is_neg_infinity() ||
      fb_x.value.is_neg_infinity()) {
    return TripleStatus::kNegInf;
  }
  if (fixed_rank_only(kind) && (fa_x.rank - fa.rank) != (fb_x.rank - fb.rank)) return TripleStatus::kRankChange;
  const double ga = fa_x.value.value() - fa.value.value();
  const double gb = fb_x.value.value() - fb.value.value();
  const double scale = std::max(1.0, std::abs(gb));
  ++report.trials;
  report.max_deficit = std::max(report.max_deficit, gb - ga);
  report.max_abs_deficit = std::max(report.max_abs_deficit, std::abs(ga - gb) / scale);
  if (ga < gb - kViolationTolerance * scale) report.violations.push_back({a_set, b_set, element, ga, gb, gb - ga});
  return TripleStatus::kValid;
}

}  // namespace

ViolationReport submodularity_sampler(const GramianCache& cache, const Metric& metric, long trials,
                                      std::uint64_t seed, const RankPolicy& policy) {
  if (trials < 1) throw ValidationError("submodularity_sampler: trials must be >= 1");
  const int m = cache.size();
  if (m < 2) throw ValidationError("submodularity_sampler: need at least two candidates");
  ViolationReport report;
  report.metric = metric;
  report.requested = trials;
  const SubsetEvaluator f(cache, metric, policy);
  Rng rng(seed);
  std::vector<int> perm(m);
  const long max_attempts = 100 * trials;
  long attempts = 0;
  while (report.trials < trials && attempts < max_attempts) {
    ++attempts;
    const int b_size = 1 + static_cast<int>(rng.below(m - 1));
    for (int i = 0; i < m; ++i) perm[i] = i;
    // partial Fisher-Yates: perm[0..b_size) is B, perm[b_size] is a
    for (int i = 0; i <= b_size; ++i) std::swap(perm[i], perm[i + rng.below(m - i)]);
    std::vector<int> b_set(perm.begin(), perm.begin() + b_size);
    const int element = perm[b_size];
    std::vector<int> a_set;
    do {
      a_set.clear();
      for (int x : b_set) {
        if (rng.below(2) == 1) a_set.push_back(x);
      }
    } while (a_set.size() == b_set.size());
    std::sort(a_set.begin(), a_set.end());
    std::sort(b_set.begin(), b_set.end());

    const auto status = record_triple(report, metric.kind(), f(a_set), f(with(a_set, element)), f(b_set),
                                      f(with(b_set, element)), a_set, b_set, element);
    if (status == TripleStatus::kNegInf) ++report.resampled;
    if (status == TripleStatus::kRankChange) ++report.skipped_rank_change;
  }
  if (report.trials == 0) {
    throw SamplingExhaustedError("submodularity_sampler: no valid sample in " + std::to_string(attempts) +
                                 " draws (metric " + std::string(metric.name()) +
                                 " is -inf on the sampled subsets)");
  }
  return report;
}

ViolationReport exhaustive_submodularity(const GramianCache& cache, const Metric& metric, const RankPolicy& policy) {
  const int m = cache.size();
  if (m < 2 || m > 12) throw ValidationError("exhaustive_submodularity: pool size must lie in [2, 12]");
  const std::uint32_t full = (1u << m) - 1;
  std::vector<Evaluation> value(full + 1);
  auto members = [m](std::uint32_t mask) {
    std::vector<int> s;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) s.push_back(i);
    }
    return s;
  };
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    value[mask] = evaluate(metric, cache.gramian_of(members(mask)).matrix(), policy);
  }
  ViolationReport report;
  report.metric = metric;
  report.exhaustive = true;
  for (int element = 0; element < m; ++element) {
    const std::uint32_t bit = 1u << element;
    const std::uint32_t rest = full & ~bit;
    // B ranges over subsets of V \ {a}; A over proper subsets of B
    for (std::uint32_t b = rest;; b = (b - 1) & rest) {
      if (b != 0) {
        for (std::uint32_t a = (b - 1) & b;; a = (a - 1) & b) {
          const auto status = record_triple(report, metric.kind(), value[a], value[a | bit], value[b],
                                            value[b | bit], members(a), members(b), element);
          if (status == TripleStatus::kNegInf) ++report.resampled;
          if (status == TripleStatus::kRankChange) ++report.skipped_rank_change;
          if (a == 0) break;
        }
      }
      if (b == 0) break;
    }
  }
  report.requested = report.trials;
  return report;
}

// ---------------------------------------------------------------------------

LtiSystem counterexample_system() {
  Eigen::MatrixXd a(3, 3);
  a << -8, 0, -2,  //
      0, -2, -8,   //
      7, 0, -3;
  std::vector<CandidateActuator> cands;
  for (int i = 0; i < 3; ++i) cands.push_back({"b" + std::to_string(i + 1), Eigen::VectorXd::Unit(3, i)});
  return LtiSystem(a, Eigen::MatrixXd(3, 0), std::move(cands));
}

CounterexampleRecord counterexample_check(const LtiSystem& sys) {
  if (sys.n() != 3 || sys.num_candidates() != 3) throw DimensionError("counterexample_check: needs a 3-state system with 3 candidates");
  const GramianCache cache(sys);
  const Metric lmin = Metric::of(MetricKind::kLambdaMin);
  auto f = [&](std::vector<int> s) { return eval_metric(lmin, cache.gramian_of(s)).value(); };
  CounterexampleRecord r{};
  r.gain_b3_given_b1 = f({0, 2}) - f({0});
  r.gain_b3_given_b1b2 = f({0, 1, 2}) - f({0, 1});
  r.gain_b3_given_b2 = f({1, 2}) - f({1});
  r.violated = r.gain_b3_given_b2 < r.gain_b3_given_b1b2;
  return r;
}

CounterexampleRecord counterexample_check() { return counterexample_check(counterexample_system()); }

// ---------------------------------------------------------------------------

std::vector<double> ray_monotonicity_probe(MetricKind kind, const Eigen::MatrixXd& x, const Eigen::MatrixXd& d,
                                           const Eigen::MatrixXd& w_a, const std::vector<double>& grid,
                                           double step) {
  if (kind != MetricKind::kTraceInverse && kind != MetricKind::kLogDet) {
    throw ValidationError("ray_monotonicity_probe: metric must be trace-inv or logdet");
  }
  auto f = [kind](const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("ray_monotonicity_probe: point is not positive definite");
    if (kind == MetricKind::kLogDet) return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols())).trace();
  };
  auto h = [&](double t) {
    const Eigen::MatrixXd p = x + t * d;
    return f(p + w_a) - f(p);
  };
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back((h(t + step) - h(t - step)) / (2.0 * step));
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd simpson_gramian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t, double rel_tol) {
  if (!(t > 0.0)) throw ValidationError("simpson_gramian: horizon must be positive");
  const Eigen::Index n = a.rows();
  auto simpson = [&](int intervals) {
    const double h = t / intervals;
    const Eigen::MatrixXd step = (a * h).exp();
    Eigen::MatrixXd x = b;  // e^{A s_i} B
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i <= intervals; ++i) {
      const double weight = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      const Eigen::MatrixXd term = x * x.transpose();
      kernels::axpy(weight, flat(term), flat(sum));
      x = step * x;
    }
    kernels::scale(h / 3.0, flat(sum));
    return sum;
  };
  int intervals = 64;
  Eigen::MatrixXd prev = simpson(intervals);
  for (int doubling = 0; doubling < 20; ++doubling) {
    intervals *= 2;
    Eigen::MatrixXd next = simpson(intervals);
    const double diff = std::sqrt(kernels::sum_squares(flat(Eigen::MatrixXd(next - prev))));
    const double size = std::sqrt(kernels::sum_squares(flat(next)));
    if (diff <= rel_tol * std::max(size, std::numeric_limits<double>::min())) {
      return next + (next - prev) / 15.0;  // one Richardson step, Simpson error is O(h^4)
    }
    prev = std::move(next);
  }
  throw NumericalError("simpson_gramian: no convergence after 20 doublings");
}

Gramian quadrature_gramian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_tol) {
  const double abscissa = spectral_abscissa(a);
  if (!(abscissa < 0.0)) throw InstabilityError("quadrature_gramian: A is not stable", abscissa);
  return Gramian(simpson_gramian(a, b, 40.0 / std::abs(abscissa), rel_tol));
}

}  // namespace gramsel
