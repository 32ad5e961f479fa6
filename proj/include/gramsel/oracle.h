#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gramsel/gramian.h"
#include "gramsel/metrics.h"

namespace gramsel {

// ---------------------------------------------------------------------------
// Exhaustive search

inline constexpr double kEnumerationLimit = 2'000'000;

/// C(n, k) exactly, or nullopt if it overflows 128 bits.
std::optional<unsigned __int128> binomial_exact(std::uint64_t n, std::uint64_t k);
/// C(n, k) as a double (exact up to 2^53).
double binomial(std::uint64_t n, std::uint64_t k);
std::string to_string_u128(unsigned __int128 v);

/// Every size-k subset with its metric value, in lexicographic index order.
struct ScoreTable {
  int k = 0;
  int pool = 0;
  /// Row r's subset occupies indices[r * k, (r + 1) * k).
  std::vector<int> indices;
  std::vector<MetricValue> values;
  std::size_t optimum = 0;

  std::size_t rows() const { return values.size(); }
  std::vector<int> subset(std::size_t row) const;
};

/// Throws EnumerationLimitError when C(M, k) exceeds kEnumerationLimit.
ScoreTable brute_force(const GramianCache& cache, const Metric& metric, int k, const RankPolicy& policy = {});

/// "e1+e3+e7;-12.345..." lines under the header "subset;value".
void write_score_csv(const ScoreTable& table, const LtiSystem& sys, std::ostream& out);

// ---------------------------------------------------------------------------
// Submodularity checks

struct Violation {
  std::vector<int> a_set;
  std::vector<int> b_set;
  int element;
  double gain_at_a;
  double gain_at_b;
  double deficit;  // gain_at_b - gain_at_a
};

struct ViolationReport {
  Metric metric = Metric::of(MetricKind::kTrace);
  long trials = 0;
  long requested = 0;
  /// Draws rejected because a value was -inf.
  long resampled = 0;
  /// trace-pinv / logprod draws skipped because the two rank jumps differ.
  long skipped_rank_change = 0;
  bool exhaustive = false;
  std::vector<Violation> violations;
  /// max over trials of gain_at_b - gain_at_a (negative when every gain strictly decreased).
  double max_deficit = -std::numeric_limits<double>::infinity();
  /// max over trials of |gain_at_a - gain_at_b| / max(1, |gain_at_b|); the modularity check.
  double max_abs_deficit = 0.0;
};

inline constexpr double kViolationTolerance = 1e-7;

/// Samples chains A subset B, a not in B (|B| uniform in 1..M-1, B uniform of that size, A
/// a uniform proper subset of B, a uniform outside B) and records diminishing-gain
/// violations beyond 1e-7 max(1, |gain_at_b|). Throws SamplingExhaustedError when no
/// valid draw is found within 100 * trials attempts.
ViolationReport submodularity_sampler(const GramianCache& cache, const Metric& metric, long trials,
                                      std::uint64_t seed, const RankPolicy& policy = {});

/// Every triple A strictly inside B, a outside B, for pools of at most 12 candidates.
ViolationReport exhaustive_submodularity(const GramianCache& cache, const Metric& metric,
                                         const RankPolicy& policy = {});

// ---------------------------------------------------------------------------
// lambda_min counterexample

/// A = [[-8, 0, -2], [0, -2, -8], [7, 0, -3]] with candidates b1..b3 = e1..e3.
LtiSystem counterexample_system();

struct CounterexampleRecord {
  double gain_b3_given_b1;
  double gain_b3_given_b1b2;
  double gain_b3_given_b2;
  bool violated;
};

inline constexpr double kCounterexampleB3GivenB1 = 0.037;
inline constexpr double kCounterexampleB3GivenB1B2 = 0.033;
inline constexpr double kCounterexampleB3GivenB2 = 0.001;
inline constexpr double kCounterexampleTolerance = 0.0005;

CounterexampleRecord counterexample_check();
/// Same computation on an arbitrary 3-state system with candidates e1..e3.
CounterexampleRecord counterexample_check(const LtiSystem& sys);

// ---------------------------------------------------------------------------
// Ray monotonicity

/// Central differences (step 1e-5) of t -> f(X + t D + W_a) - f(X + t D) for
/// f = -tr(.)^{-1} or log det. Throws ValidationError for other metrics and
/// NumericalError when a point is not positive definite.
std::vector<double> ray_monotonicity_probe(MetricKind kind, const Eigen::MatrixXd& x, const Eigen::MatrixXd& d,
                                           const Eigen::MatrixXd& w_a, const std::vector<double>& grid,
                                           double step = 1e-5);

// ---------------------------------------------------------------------------
// Quadrature references

/// Composite Simpson for int_0^t e^{A s} B B^T e^{A^T s} ds, panels doubled until two
/// successive results differ by less than rel_tol in Frobenius norm (relative).
Eigen::MatrixXd simpson_gramian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t, double rel_tol);

/// Infinite-horizon Gramian by Simpson on [0, 40 / |abscissa|]. Throws InstabilityError for
/// unstable A and NumericalError after 20 doublings without convergence.
Gramian quadrature_gramian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_tol = 1e-10);

}  // namespace gramsel
