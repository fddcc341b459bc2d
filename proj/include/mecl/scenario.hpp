#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mecl/clarity.hpp"
#include "mecl/ergodic.hpp"
#include "mecl/scheduler.hpp"
#include "mecl/vehicle.hpp"

namespace mecl {

/// Raised for any scenario-file or field validation problem; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlannerMode { GenTisd, UniformTisd, Lawnmower };
enum class ChargerPrediction { Nominal, HoldLast };

const char* to_string(PlannerMode mode);
PlannerMode planner_mode_from_string(const std::string& s);

struct FailureWindow {
  double start = 0.0;
  double duration = -1.0;  // negative: permanent

  bool active(double t) const { return t >= start && (duration < 0.0 || t < start + duration); }
};

struct RobotRemoval {
  int robot = 0;  // 1-based id
  double time = 0.0;
};

struct ScenarioConfig {
  // domain
  double length_x = 10.0;
  double length_y = 10.0;
  std::size_t width_cells = 25;
  std::size_t height_cells = 25;

  // environment
  std::string preset = "env2";
  double initial_clarity = 0.01;

  // robots
  int robot_count = 4;
  std::vector<Vec2> start_positions;      // defaults around the charger
  std::vector<double> initial_soc;        // fraction of capacity, default 1
  bool allow_overcapacity = false;

  BatteryModel battery;
  SensorModel sensor{0.0, 1.0, 0.1};  // radius 0: one cell diagonal
  TrackingGains tracking;
  double repulsion_gain = 0.5;

  SchedulerConfig scheduler;
  bool failsafe_budget = false;

  // planner
  PlannerMode planner_mode = PlannerMode::GenTisd;
  PlannerConfig planner;  // planner.horizon doubles as the replanning period T_H
  int modes = 10;
  double tisd_epsilon = 1e-3;
  double lawnmower_spacing = 1.0;
  double lawnmower_speed = 0.8;

  // charger
  ChargerPose charger_start{5.0, 5.0, 0.0};
  PursuitGains charger_gains;
  NoiseModel charger_noise;
  ChargerPrediction prediction = ChargerPrediction::Nominal;

  // communication
  double latency_min = 0.02;
  double latency_max = 0.2;
  double drop_probability = 0.0;
  std::vector<FailureWindow> failures;

  // mission events
  std::vector<double> robot_additions;
  std::vector<RobotRemoval> robot_removals;

  // simulation
  double dt = 0.05;
  double duration = 300.0;
  double record_interval = 0.5;
  std::uint64_t seed = 1;
  int stop_after_returns = 0;  // end early once this many returns are logged (0: never)

  /// Throws ConfigError with a field-precise message.
  void validate() const;

  double footprint_radius() const;
  double min_initial_flight_time() const;

  /// Sectioned key-value text that parses back to the same configuration.
  std::string to_text() const;
};

/// Parses sectioned key-value text. Unknown sections or keys are errors.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

/// Sets one `section.key` value as if it appeared in a scenario file. Does not revalidate.
void apply_override(ScenarioConfig& cfg, const std::string& dotted_key, const std::string& value);

/// Builds the grid for a named preset (env1..env5); env1 has no process noise.
EnvironmentGrid make_environment(const std::string& preset, std::size_t width_cells, std::size_t height_cells,
                                 double length_x, double length_y, double initial_clarity);

}  // namespace mecl
