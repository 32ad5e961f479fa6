#pragma once

#include "json.hpp"

#include "gramsel/greedy.h"
#include "gramsel/oracle.h"

namespace gramsel {

/// Extended reals go out as numbers, or as the strings "-inf" / "inf".
nlohmann::json extended_json(double v);
nlohmann::json extended_json(MetricValue v);

nlohmann::json selection_json(const SelectionResult& result, const SelectionProblem& problem);
nlohmann::json violation_json(const ViolationReport& report, const LtiSystem& sys);
nlohmann::json counterexample_json(const CounterexampleRecord& record);

}  // namespace gramsel
