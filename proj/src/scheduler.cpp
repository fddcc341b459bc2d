#include "mecl/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace mecl {

void SchedulerConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(fmt::format("scheduler.{} must be > 0", name));
  };
  positive(rendezvous_horizon, "T_R");
  positive(decision_interval, "T_E");
  positive(nominal_horizon, "T_N");
  positive(buffer_time, "T_bf");
  positive(rendezvous_altitude, "d");
  positive(max_speed, "v_max");
  if (!(charge_time >= 0.0)) throw std::invalid_argument("scheduler.T_ch must be >= 0");
  if (!(nominal_horizon < rendezvous_horizon)) throw std::invalid_argument("scheduler.T_N must be < scheduler.T_R");
  if (!(reserve_multiplier >= 1.0)) throw std::invalid_argument("scheduler.reserve_multiplier must be >= 1");
}

double remaining_flight_time(double soc, const BatteryModel& battery) {
  return std::max(0.0, (soc - battery.e_min) / battery.discharge_rate);
}

ReserveEnergy reserve_energy(const Vec3& rendezvous, const Vec2& worst_case, const BatteryModel& battery,
                             const SchedulerConfig& cfg) {
  if (!(cfg.max_speed > 0.0)) throw std::invalid_argument("v_max must be > 0");
  const Vec3 ground(worst_case.x(), worst_case.y(), 0.0);
  ReserveEnergy out;
  out.landing_time = (rendezvous - ground).norm() / cfg.max_speed;
  out.energy = battery.discharge_rate * out.landing_time;
  return out;
}

Trajectory build_b2b(const Vec2& start, const Vec2& start_velocity, const Vec3& rendezvous, double duration,
                     double dt, double max_speed, double start_time) {
  if (!(duration > 0.0)) throw UnreachableRendezvous("b2b horizon must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const Vec2 goal = rendezvous.head<2>();
  const double distance = (goal - start).norm();
  if (distance / duration > max_speed) {
    throw UnreachableRendezvous(
        fmt::format("rendezvous {:.3f} m away needs {:.3f} m/s > v_max {:.3f}", distance, distance / duration, max_speed));
  }
  const double T = duration;
  const Vec2 a0 = start;
  const Vec2 a1 = start_velocity;
  const Vec2 a2 = (3.0 * (goal - start) - 2.0 * start_velocity * T) / (T * T);
  const Vec2 a3 = (2.0 * (start - goal) + start_velocity * T) / (T * T * T);
  const auto pos = [&](double s) -> Vec2 { return a0 + s * (a1 + s * (a2 + s * a3)); };
  const auto vel = [&](double s) -> Vec2 { return a1 + s * (2.0 * a2 + 3.0 * s * a3); };

  const auto steps = static_cast<std::size_t>(std::max(1L, std::lround(T / dt)));
  const double h = T / static_cast<double>(steps);
  Trajectory tr;
  tr.start_time = start_time;
  tr.dt = h;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double s = i == steps ? T : h * static_cast<double>(i);
    tr.position.push_back(i == steps ? goal : pos(s));
    tr.velocity.push_back(i == steps ? Vec2::Zero() : vel(s));
  }
  for (std::size_t i = 0; i < steps; ++i) tr.control.push_back((tr.velocity[i + 1] - tr.velocity[i]) / h);
  return tr;
}

ReferenceState CandidateTrajectory::reference_at(double t) const {
  if (position.empty()) return {};
  const double s = (t - start_time) / dt;
  if (s >= static_cast<double>(position.size() - 1)) return {position.back(), Vec2::Zero(), Vec2::Zero()};
  if (s <= 0.0) return {position.front(), velocity.front(), control.empty() ? Vec2::Zero() : control.front()};
  const auto i = static_cast<std::size_t>(std::floor(s));
  const double f = s - static_cast<double>(i);
  return {(1.0 - f) * position[i] + f * position[i + 1], (1.0 - f) * velocity[i] + f * velocity[i + 1],
          i < control.size() ? control[i] : Vec2::Zero()};
}

CandidateTrajectory CandidateTrajectory::shifted(double delay) const {
  CandidateTrajectory out = *this;
  out.start_time += delay;
  return out;
}

CandidateTrajectory build_candidate(const ReferenceSource& nominal, double nominal_duration, const Trajectory& b2b,
                                    const RechargeableState& start, double start_time, const BatteryModel& battery,
                                    const TrackingGains& gains, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  CandidateTrajectory out;
  out.start_time = start_time;
  out.dt = dt;
  const auto nominal_steps = static_cast<std::size_t>(std::max(0L, std::lround(nominal_duration / dt)));
  const std::size_t b2b_steps = b2b.control.size();

  RechargeableState state = start;
  out.position.push_back(state.position);
  out.velocity.push_back(state.velocity);
  out.soc.push_back(state.soc);
  const auto advance = [&](const ReferenceState& ref) {
    const Vec2 u = tracking_controller(state, ref, gains);
    state = step_rechargeable(state, u, battery, dt);
    out.control.push_back(u);
    out.position.push_back(state.position);
    out.velocity.push_back(state.velocity);
    out.soc.push_back(state.soc);
  };
  for (std::size_t i = 0; i < nominal_steps; ++i) advance(nominal(start_time + dt * static_cast<double>(i)));
  for (std::size_t i = 0; i < b2b_steps; ++i) advance({b2b.position[i], b2b.velocity[i], b2b.control[i]});

  out.b2b_horizon = b2b.duration();
  out.candidate_horizon = dt * static_cast<double>(nominal_steps) + out.b2b_horizon;
  return out;
}

bool gap_flag(double flight_time, std::size_t position, const SchedulerConfig& cfg) {
  return flight_time >
         cfg.rendezvous_horizon + cfg.decision_interval + static_cast<double>(position) * cfg.gap();
}

GwareResult gware(std::span<const double> flight_times, std::span<const bool> exempt, const SchedulerConfig& cfg,
                  std::size_t* comparisons) {
  if (flight_times.size() != exempt.size()) throw std::invalid_argument("gware input sizes differ");
  GwareResult out;
  const std::size_t n = flight_times.size();
  out.roster.resize(n);
  std::iota(out.roster.begin(), out.roster.end(), std::size_t{0});
  std::stable_sort(out.roster.begin(), out.roster.end(), [&](std::size_t a, std::size_t b) {
    if (comparisons) ++*comparisons;
    return flight_times[a] < flight_times[b];
  });

  out.flags.assign(n, true);
  for (std::size_t pos = 1; pos < n; ++pos) {
    const auto robot = out.roster[pos];
    out.flags[pos] = gap_flag(flight_times[robot], pos + 1, cfg);
    if (!out.flags[pos] && !exempt[robot]) out.violation = true;
  }

  out.commit.assign(n, false);
  if (out.violation) {
    for (std::size_t pos = 1; pos < n; ++pos) out.commit[out.roster[pos]] = !exempt[out.roster[pos]];
  }
  return out;
}

bool reserve_soc_condition(std::span<const double> soc_profile, double reserve) {
  return std::all_of(soc_profile.begin(), soc_profile.end(), [&](double e) { return e > reserve; });
}

std::vector<bool> eware(std::span<const CandidateTrajectory* const> candidates, std::span<const double> reserves,
                        std::span<const bool> exempt) {
  std::vector<bool> commit(candidates.size(), false);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (exempt[i] || candidates[i] == nullptr) continue;
    commit[i] = candidates[i]->feasible && reserve_soc_condition(candidates[i]->soc, reserves[i]);
  }
  return commit;
}

RmeschDecision rmesch(const RmeschInput& input, const SchedulerConfig& cfg) {
  const std::size_t n = input.flight_times.size();
  if (input.candidates.size() != n || input.reserves.size() != n || input.exempt.size() != n)
    throw std::invalid_argument("rmesch input sizes differ");
  RmeschDecision out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!input.exempt[i] && input.candidates[i] == nullptr) {
      out.retry = true;
      return out;
    }
  }
  auto gap = gware(input.flight_times, input.exempt, cfg);
  out.roster = gap.roster;
  out.flags = gap.flags;
  out.return_index.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) out.return_index[gap.roster[pos]] = static_cast<int>(pos + 1);
  out.gap_violation = gap.violation;
  out.mobcontinue = true;
  out.commit = gap.violation ? gap.commit : eware(input.candidates, input.reserves, input.exempt);
  for (std::size_t i = 0; i < n; ++i)
    if (out.commit[i] && !input.candidates[i]->feasible) out.commit[i] = false;
  return out;
}

int max_supported_robots(double min_flight_time, const SchedulerConfig& cfg) {
  const double slack = min_flight_time - cfg.rendezvous_horizon - cfg.decision_interval;
  if (slack < 0.0) return 0;
  return 1 + static_cast<int>(std::floor(slack / cfg.gap()));
}

bool can_add_robot(double min_flight_time, int current_robots, const SchedulerConfig& cfg) {
  if (current_robots < 1) throw std::invalid_argument("current robot count must be >= 1");
  return min_flight_time >=
         cfg.rendezvous_horizon + cfg.decision_interval + static_cast<double>(current_robots) * cfg.gap();
}

}  // namespace mecl
