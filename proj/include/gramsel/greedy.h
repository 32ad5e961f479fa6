#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gramsel/gramian.h"
#include "gramsel/metrics.h"

namespace gramsel {

/// Maximize f(S) subject to |S| <= k over the candidate pool of a cached system.
struct SelectionProblem {
  const GramianCache* cache;
  Metric metric;
  int k;
  RankPolicy policy{};
  bool two_stage = false;

  /// Throws ValidationError for k outside [1, M], a null cache, or a bad policy.
  void validate() const;
};

struct IterationRecord {
  std::string id;
  int index;
  /// Gain in the target metric, with the extended-real rules of marginal_gain.
  double gain;
  MetricValue value;
  int rank;
  /// 1 for the rank-first phase of two-stage greedy, 2 otherwise.
  int stage;
};

struct SelectionResult {
  std::vector<std::string> selected;
  std::vector<int> indices;
  MetricValue value;
  int rank = 0;
  std::vector<IterationRecord> trace;
  double theoretical_ratio = 0.0;
  std::optional<double> certified_upper_bound;
  /// False when the final Gramian is rank deficient (or the target is still -inf).
  bool controllable = false;
  /// Metric evaluations performed, including the value of each accepted set.
  long evaluations = 0;
};

/// Plain greedy (two-stage when problem.two_stage). Ties go to the lowest candidate index.
SelectionResult greedy_select(const SelectionProblem& problem);

/// Rank-first phase, secondary tie-break by trace-pinv / log-product, then greedy on the
/// target. Throws ValidationError unless the target is one of the strict metrics.
SelectionResult two_stage_greedy(const SelectionProblem& problem);

/// Lazy (priority-queue) greedy. Returns the same selection as greedy_select on every
/// input. Stale upper bounds are only trusted while the metric is submodular on the
/// current lattice: always for trace and rank, once f(S) is finite for the strict metrics,
/// and once rank(S) = n for trace-pinv and logprod. Outside that regime it evaluates every
/// candidate. Throws ValidationError for lambda-min.
SelectionResult lazy_greedy(const SelectionProblem& problem);

/// 1 - ((k - 1) / k)^k.
double greedy_bound(int k);

/// A-posteriori bound from submodularity and monotonicity:
/// f(OPT) <= f(S) + sum of the k largest marginal gains Delta(a | S), a not in S.
/// Throws ValidationError for a non-submodular metric (or trace-pinv / logprod below full
/// rank) and NumericalError when f(S) is -inf.
double certified_gap(const SelectionResult& result, const SelectionProblem& problem);

}  // namespace gramsel
