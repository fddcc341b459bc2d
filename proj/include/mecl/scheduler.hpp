#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mecl/ergodic.hpp"
#include "mecl/vehicle.hpp"

namespace mecl {

/// Shared timing constants of the recharging schedule (seconds, meters).
struct SchedulerConfig {
  double rendezvous_horizon = 18.0;  // T_R
  double decision_interval = 1.5;    // T_E
  double nominal_horizon = 2.0;      // T_N
  double charge_time = 0.0;          // T_ch
  double buffer_time = 15.0;         // T_bf
  double rendezvous_altitude = 1.0;  // d
  double max_speed = 1.0;            // v_max used for landing and b2b feasibility
  double reserve_multiplier = 1.1;

  double gap() const { return charge_time + buffer_time; }  // T_delta
  void validate() const;
};

class UnreachableRendezvous : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double remaining_flight_time(double soc, const BatteryModel& battery);

struct ReserveEnergy {
  double energy = 0.0;
  double landing_time = 0.0;
};

/// Straight-line bounded-speed transfer from the rendezvous point to the
/// worst-case charger position on the ground. No margin applied.
ReserveEnergy reserve_energy(const Vec3& rendezvous, const Vec2& worst_case, const BatteryModel& battery,
                             const SchedulerConfig& cfg);

/// Per-axis cubic from (start, start_velocity) to rest at the rendezvous over
/// `duration` seconds, sampled every `dt`. Controls hold the mean acceleration
/// of each interval so a zero-order-hold rollout reproduces the velocities.
Trajectory build_b2b(const Vec2& start, const Vec2& start_velocity, const Vec3& rendezvous, double duration,
                     double dt, double max_speed, double start_time = 0.0);

/// Reference sampled by the candidate rollout over the nominal segment.
using ReferenceSource = std::function<ReferenceState(double)>;

struct CandidateTrajectory {
  double start_time = 0.0;
  double dt = 0.05;
  std::vector<Vec2> position;
  std::vector<Vec2> velocity;
  std::vector<Vec2> control;
  std::vector<double> soc;
  Vec3 rendezvous = Vec3::Zero();
  double reserve = 0.0;
  double landing_time = 0.0;      // T_L
  double candidate_horizon = 0.0; // T_C
  double b2b_horizon = 0.0;       // T_B
  bool feasible = true;           // false when the rendezvous could not be reached in time

  double end_time() const { return start_time + dt * static_cast<double>(position.empty() ? 0 : position.size() - 1); }
  /// Reference for executing this trajectory at time t (holds the final state past the end).
  ReferenceState reference_at(double t) const;
  /// Copy shifted later in time by `delay` seconds.
  CandidateTrajectory shifted(double delay) const;
};

/// Closed-loop rollout: track the nominal reference until start_time + nominal_duration,
/// then the b2b reference, integrating the battery.
CandidateTrajectory build_candidate(const ReferenceSource& nominal, double nominal_duration, const Trajectory& b2b,
                                    const RechargeableState& start, double start_time, const BatteryModel& battery,
                                    const TrackingGains& gains, double dt);

/// G^l = T_F^l > T_R + T_E + l T_delta, with l the 1-based roster position.
bool gap_flag(double flight_time, std::size_t position, const SchedulerConfig& cfg);

struct GwareResult {
  bool violation = false;
  std::vector<std::size_t> roster;  // robot ids, ascending T_F, ties by id
  std::vector<bool> flags;          // per roster position; position 0 is always true
  std::vector<bool> commit;         // per robot: adopt the candidate
};

/// Gap-aware check. `exempt` marks robots already returning or charging; they
/// never trigger a violation and never adopt candidates. `comparisons`, when
/// given, accumulates comparator calls of the roster sort.
GwareResult gware(std::span<const double> flight_times, std::span<const bool> exempt, const SchedulerConfig& cfg,
                  std::size_t* comparisons = nullptr);

/// Reserve SoC condition: every sample strictly above the reserve.
bool reserve_soc_condition(std::span<const double> soc_profile, double reserve);

/// Energy-aware commit per robot; exempt robots keep their previous trajectory.
std::vector<bool> eware(std::span<const CandidateTrajectory* const> candidates, std::span<const double> reserves,
                        std::span<const bool> exempt);

struct RmeschInput {
  std::span<const CandidateTrajectory* const> candidates;  // null for exempt robots
  std::span<const double> reserves;
  std::span<const double> flight_times;
  std::span<const bool> exempt;
};

struct RmeschDecision {
  bool retry = false;  // some active robot's inputs are missing
  bool gap_violation = false;
  bool mobcontinue = false;
  std::vector<std::size_t> roster;
  std::vector<bool> flags;
  std::vector<bool> commit;
  std::vector<int> return_index;  // 1-based roster position per robot
};

RmeschDecision rmesch(const RmeschInput& input, const SchedulerConfig& cfg);

/// Largest team the minimum flight time supports; 0 when even one robot cannot return.
int max_supported_robots(double min_flight_time, const SchedulerConfig& cfg);

bool can_add_robot(double min_flight_time, int current_robots, const SchedulerConfig& cfg);

}  // namespace mecl
