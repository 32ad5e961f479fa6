#include "gramsel/report.h"

#include <cmath>

namespace gramsel {

using nlohmann::json;

json extended_json(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return v;
}

json extended_json(MetricValue v) { return extended_json(v.value()); }

namespace {

json ids(const std::vector<int>& indices, const LtiSystem& sys) {
  json out = json::array();
  for (int i : indices) out.push_back(sys.candidates()[i].id);
  return out;
}

}  // namespace

json selection_json(const SelectionResult& result, const SelectionProblem& problem) {
  json trace = json::array();
  for (const auto& it : result.trace) {
    trace.push_back({{"id", it.id},
                     {"gain", extended_json(it.gain)},
                     {"value", extended_json(it.value)},
                     {"rank", it.rank},
                     {"stage", it.stage}});
  }
  json out;
  out["metric"] = std::string(problem.metric.name());
  out["k"] = problem.k;
  out["two_stage"] = problem.two_stage;
  out["selected"] = result.selected;
  out["value"] = extended_json(result.value);
  out["rank"] = result.rank;
  out["trace"] = std::move(trace);
  out["theoretical_ratio"] = result.theoretical_ratio;
  out["certified_upper_bound"] =
      result.certified_upper_bound ? json(*result.certified_upper_bound) : json(nullptr);
  out["controllable"] = result.controllable;
  // -tr W^-1 has diminishing gains only when the Gramians commute; verify finds counterexamples
  const MetricKind kind = problem.metric.kind();
  out["guarantee"] = !is_submodular(kind)            ? "none (metric not submodular)"
                     : kind == MetricKind::kTraceInverse ? "heuristic (trace-inv is not submodular in general; bound and certificate may not hold)"
                                                         : "submodular: greedy bound 1-((k-1)/k)^k on the normalized metric";
  out["evaluations"] = result.evaluations;
  return out;
}

json violation_json(const ViolationReport& report, const LtiSystem& sys) {
  json violations = json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"A", ids(v.a_set, sys)},
                          {"B", ids(v.b_set, sys)},
                          {"a", sys.candidates()[v.element].id},
                          {"gain_at_A", v.gain_at_a},
                          {"gain_at_B", v.gain_at_b},
                          {"deficit", v.deficit}});
  }
  json out;
  out["metric"] = std::string(report.metric.name());
  out["exhaustive"] = report.exhaustive;
  out["trials"] = report.trials;
  out["requested"] = report.requested;
  out["resampled"] = report.resampled;
  out["skipped_rank_change"] = report.skipped_rank_change;
  out["violation_count"] = report.violations.size();
  out["violations"] = std::move(violations);
  out["max_deficit"] = extended_json(report.max_deficit);
  out["max_abs_deficit"] = report.max_abs_deficit;
  out["tolerance"] = kViolationTolerance;
  return out;
}

json counterexample_json(const CounterexampleRecord& r) {
  return {{"gain_b3_given_b1", r.gain_b3_given_b1},
          {"gain_b3_given_b1b2", r.gain_b3_given_b1b2},
          {"gain_b3_given_b2", r.gain_b3_given_b2},
          {"violated", r.violated}};
}

}  // namespace gramsel
