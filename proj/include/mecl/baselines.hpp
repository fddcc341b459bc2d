#pragma once

#include <string>
#include <vector>

#include "mecl/ergodic.hpp"
#include "mecl/scenario.hpp"

namespace mecl {

/// Sweep line offsets spacing/2, 3 spacing/2, ... strictly inside [0, length].
std::vector<double> lawnmower_line_offsets(double length, double spacing);

/// Corner points of one closed boustrophedon loop: up through every line, then back down.
std::vector<Vec2> lawnmower_waypoints(double length_x, double length_y, double spacing);

/// Constant-speed loop through the waypoints sampled every dt. Replay it
/// periodically (see lawnmower_reference_at) to cover any mission length.
Trajectory lawnmower_tisd_free_reference(double length_x, double length_y, double spacing, double speed, double dt);

ReferenceState lawnmower_reference_at(const Trajectory& loop, double t, double phase);

struct PlannerComparison {
  std::vector<std::string> modes;
  std::vector<double> time;
  std::vector<std::vector<double>> deficit;  // [mode][sample]
  std::vector<double> final_deficit;
  std::vector<double> mean_final_half;

  std::string to_csv() const;
  std::string summary() const;
};

/// Runs each configuration; they must differ only in planner mode.
PlannerComparison compare_planners(const std::vector<ScenarioConfig>& cfgs);

}  // namespace mecl
