#pragma once

#include "mecl/metrics.hpp"
#include "mecl/scenario.hpp"

namespace mecl {

/// Runs the mission: replanning every T_H, scheduling every T_E, physics every sim dt.
/// Throws ConfigError before starting when the configuration is invalid.
MetricsRecord run_scenario(const ScenarioConfig& cfg);

}  // namespace mecl
