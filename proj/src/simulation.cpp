#include "mecl/simulation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>

#include "json.hpp"
#include "mecl/baselines.hpp"
#include "mecl/failsafe.hpp"
#include "mecl/message_bus.hpp"
#include "mecl/tisd.hpp"

namespace mecl {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTimeEps = 1e-9;
constexpr double kTouchdownRadius = 0.1;

enum class Mode { Active, Returning, Charging, Removed };

struct Robot {
  int id = 0;
  RechargeableState state;
  Mode mode = Mode::Active;
  std::optional<CandidateTrajectory> committed;
  std::optional<CandidateTrajectory> pending;
  double pending_reserve = 0.0;
  double upload_flight_time = 0.0;
  FailsafeMemory memory;
  bool decided = false;
  bool landing = false;
  double touchdown_not_before = 0.0;
  double hover_until = -1.0;
  Vec2 hover_position = Vec2::Zero();
  double release_time = 0.0;
  bool below_min = false;
  int plan_slot = -1;
  double phase = 0.0;

  bool in_roster() const { return mode == Mode::Active || mode == Mode::Returning; }
  bool flying() const { return in_roster(); }
};

double wrap(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

Rng stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return Rng(seq);
}

class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg);
  MetricsRecord run();

 private:
  void replan(double t);
  void begin_iteration(double t);
  void close_iteration(double t);
  void deliver(double t);
  void run_central(double t);
  void apply_decision(Robot& r, int ret, bool commit, double t);
  void start_return(Robot& r, double t, const char* reason);
  void process_mission_events(double t);
  void step_dynamics(double t);
  void step_robot(Robot& r, double t, const Vec2& repulsion);
  void step_charger(double t);
  void record(double t);

  std::optional<CandidateTrajectory> make_candidate(const Robot& r, double t, double& reserve);
  ReferenceState nominal_reference(const Robot& r, double t) const;
  Vec2 charger_command(double t) const;
  bool central_up(double t) const;
  void event(double t, const char* type, Json extra = Json::object());

  ScenarioConfig cfg_;
  SensorModel sensor_;
  EnvironmentGrid grid_;
  FourierBasis basis_;
  MessageBus bus_;
  Rng charger_rng_;
  Rng measurement_rng_;
  std::vector<Robot> robots_;

  ChargerPose charger_;
  ChargerTrajectory charger_nominal_;
  ChargerEstimate estimate_;
  Vec2 last_command_ = Vec2::Zero();
  std::optional<double> halt_time_;
  bool halted_ = false;

  TrajectoryBundle bundle_;
  Trajectory lawnmower_loop_;

  int iteration_ = -1;
  bool iteration_open_ = false;
  double iteration_start_ = 0.0;
  double deadline_ = 0.0;
  std::vector<int> expected_;
  std::vector<int> uploaded_;
  bool central_ran_ = false;
  bool mobcontinue_received_ = false;
  bool was_up_ = true;

  double last_touchdown_ = -std::numeric_limits<double>::infinity();
  std::vector<bool> addition_done_;
  std::vector<bool> removal_done_;

  MetricsRecord out_;
};

Simulation::Simulation(const ScenarioConfig& cfg)
    : cfg_(cfg),
      sensor_(cfg.sensor),
      grid_(make_environment(cfg.preset, cfg.width_cells, cfg.height_cells, cfg.length_x, cfg.length_y,
                             cfg.initial_clarity)),
      basis_(cfg.modes, cfg.length_x, cfg.length_y),
      bus_(stream(cfg.seed, 1)(), cfg.latency_min, cfg.latency_max, cfg.drop_probability),
      charger_rng_(stream(cfg.seed, 2)),
      measurement_rng_(stream(cfg.seed, 3)),
      charger_(cfg.charger_start) {
  sensor_.footprint_radius = cfg.footprint_radius();
  estimate_.mean = Vec3(charger_.x, charger_.y, charger_.heading);
  estimate_.covariance = Mat3::Identity() * 1e-4;

  const int n = cfg.robot_count;
  for (int i = 0; i < n; ++i) {
    Robot r;
    r.id = i + 1;
    if (cfg.start_positions.empty()) {
      const double a = 2.0 * std::numbers::pi * i / n;
      const Vec2 p = charger_.position() + Vec2(std::cos(a), std::sin(a));
      r.state.position = p.cwiseMax(Vec2(0.1, 0.1)).cwiseMin(Vec2(cfg.length_x - 0.1, cfg.length_y - 0.1));
    } else {
      r.state.position = cfg.start_positions[static_cast<std::size_t>(i)];
    }
    const double frac = cfg.initial_soc.empty() ? 1.0 : cfg.initial_soc[static_cast<std::size_t>(i)];
    r.state.soc = frac * cfg.battery.capacity;
    r.state.altitude = cfg.scheduler.rendezvous_altitude;
    r.state.airborne = true;
    robots_.push_back(r);
  }

  if (cfg.planner_mode == PlannerMode::Lawnmower) {
    lawnmower_loop_ = lawnmower_tisd_free_reference(cfg.length_x, cfg.length_y, cfg.lawnmower_spacing,
                                                    cfg.lawnmower_speed, cfg.dt);
    for (auto& r : robots_) r.phase = lawnmower_loop_.duration() * (r.id - 1) / n;
  }

  addition_done_.assign(cfg.robot_additions.size(), false);
  removal_done_.assign(cfg.robot_removals.size(), false);
  out_.robot_columns = n + static_cast<int>(cfg.robot_additions.size());
  out_.config_text = cfg.to_text();

  const int supported = max_supported_robots(cfg.min_initial_flight_time(), cfg.scheduler);
  if (n > supported) {
    out_.counters.overcapacity = true;
    event(0.0, "overcapacity", {{"robots", n}, {"supported", supported}});
  }
}

bool Simulation::central_up(double t) const {
  return std::none_of(cfg_.failures.begin(), cfg_.failures.end(), [&](const FailureWindow& w) { return w.active(t); });
}

void Simulation::event(double t, const char* type, Json extra) {
  Json e;
  e["t"] = t;
  e["type"] = type;
  for (auto& [k, v] : extra.items()) e[k] = v;
  out_.events.push_back(e.dump());
}

ReferenceState Simulation::nominal_reference(const Robot& r, double t) const {
  if (cfg_.planner_mode == PlannerMode::Lawnmower) return lawnmower_reference_at(lawnmower_loop_, t, r.phase);
  if (r.plan_slot < 0) return {r.state.position, Vec2::Zero(), Vec2::Zero()};
  const Trajectory& tr = bundle_.robots[static_cast<std::size_t>(r.plan_slot)];
  return {tr.position_at(t), tr.velocity_at(t), tr.control_at(t)};
}

void Simulation::replan(double t) {
  if (!central_up(t)) {
    event(t, "replan_skipped");
    return;
  }
  std::vector<Robot*> team;
  for (auto& r : robots_)
    if (r.mode != Mode::Removed) team.push_back(&r);
  if (team.empty()) return;

  const double horizon = cfg_.planner.horizon;
  TrajectoryBundle bundle;
  if (cfg_.planner_mode == PlannerMode::Lawnmower) {
    bundle.start_time = t;
    bundle.dt = cfg_.planner.dt;
    bundle.horizon = horizon;
    const auto steps = static_cast<std::size_t>(std::lround(horizon / cfg_.planner.dt));
    for (Robot* r : team) {
      Trajectory tr;
      tr.start_time = t;
      tr.dt = cfg_.planner.dt;
      for (std::size_t i = 0; i <= steps; ++i) {
        const auto ref = lawnmower_reference_at(lawnmower_loop_, t + tr.dt * static_cast<double>(i), r->phase);
        tr.position.push_back(ref.position);
        tr.velocity.push_back(ref.velocity);
      }
      tr.control.assign(steps, Vec2::Zero());
      bundle.robots.push_back(std::move(tr));
    }
    const auto phi = SpatialDistribution::uniform(grid_);
    out_.epoch_metric.push_back(ergodic_metric(trajectory_coefficients(bundle, basis_),
                                               distribution_coefficients(phi, basis_), basis_));
  } else {
    int flying = 0;
    for (Robot* r : team) flying += r->flying() ? 1 : 0;
    const SpatialDistribution phi = cfg_.planner_mode == PlannerMode::GenTisd
                                        ? gen_tisd(grid_, sensor_, std::max(1, flying), cfg_.tisd_epsilon)
                                        : SpatialDistribution::uniform(grid_);
    std::vector<RobotStart> starts;
    for (Robot* r : team) starts.push_back({r->state.position, r->flying() ? r->state.velocity : Vec2::Zero()});
    PlanResult plan = plan_ergodic(starts, phi, cfg_.planner, basis_, t);
    out_.epoch_metric.push_back(plan.metric);
    bundle = std::move(plan.bundle);
  }
  for (std::size_t i = 0; i < team.size(); ++i) team[i]->plan_slot = static_cast<int>(i);
  bundle_ = std::move(bundle);

  // The first T_R seconds of the charger path were already promised; only the tail is replanned.
  const double t_r = cfg_.scheduler.rendezvous_horizon;
  if (charger_nominal_.pose.empty()) {
    charger_nominal_ = plan_charger_nominal(bundle_, charger_, cfg_.charger_gains, t, horizon + t_r);
  } else {
    const double dt = cfg_.planner.dt;
    const auto frozen = static_cast<std::size_t>(std::lround(t_r / dt));
    ChargerTrajectory next;
    next.start_time = t;
    next.dt = dt;
    for (std::size_t i = 0; i <= frozen; ++i) next.pose.push_back(charger_nominal_.pose_at(t + dt * static_cast<double>(i)));
    for (std::size_t i = 0; i < frozen; ++i)
      next.control.push_back(charger_nominal_.control_at(t + dt * static_cast<double>(i)));
    const ChargerTrajectory tail =
        plan_charger_nominal(bundle_, next.pose.back(), cfg_.charger_gains, t + t_r, horizon);
    next.pose.insert(next.pose.end(), tail.pose.begin() + 1, tail.pose.end());
    next.control.insert(next.control.end(), tail.control.begin(), tail.control.end());
    charger_nominal_ = std::move(next);
  }
}

std::optional<CandidateTrajectory> Simulation::make_candidate(const Robot& r, double t, double& reserve) {
  const SchedulerConfig& sc = cfg_.scheduler;
  CommandSchedule command;
  if (cfg_.prediction == ChargerPrediction::Nominal) {
    command = [this, t](double s) -> Vec2 {
      if (halt_time_ && t + s >= *halt_time_) return Vec2::Zero();
      return charger_nominal_.control_at(t + s);
    };
  } else {
    const Vec2 held = last_command_;
    command = [held](double) { return held; };
  }
  const auto pred = predict_rendezvous(estimate_, sc.rendezvous_horizon, sc.rendezvous_altitude, command,
                                       cfg_.charger_noise.process, cfg_.dt);
  const Vec2 worst = worst_case_charger_point(pred.estimate);
  const ReserveEnergy landing = reserve_energy(pred.point, worst, cfg_.battery, sc);
  reserve = landing.energy * sc.reserve_multiplier;
  if (cfg_.failsafe_budget)
    reserve += cfg_.battery.discharge_rate * static_cast<double>(r.memory.return_index) * sc.gap();

  const auto reference = [this, &r](double time) { return nominal_reference(r, time); };
  const double dt = cfg_.dt;
  const auto nominal_steps = std::lround(sc.nominal_horizon / dt);
  const auto total_steps = static_cast<long>(std::floor((sc.rendezvous_horizon - landing.landing_time) / dt + kTimeEps));

  CandidateTrajectory cand;
  try {
    if (total_steps <= nominal_steps) throw UnreachableRendezvous("landing leaves no time for the transfer");
    const double nominal_duration = dt * static_cast<double>(nominal_steps);
    const CandidateTrajectory head =
        build_candidate(reference, nominal_duration, Trajectory{}, r.state, t, cfg_.battery, cfg_.tracking, dt);
    RechargeableState mid = r.state;
    mid.position = head.position.back();
    mid.velocity = head.velocity.back();
    const Trajectory b2b = build_b2b(mid.position, mid.velocity, pred.point,
                                     dt * static_cast<double>(total_steps - nominal_steps), dt, sc.max_speed,
                                     t + nominal_duration);
    cand = build_candidate(reference, nominal_duration, b2b, r.state, t, cfg_.battery, cfg_.tracking, dt);
  } catch (const UnreachableRendezvous& e) {
    ++out_.counters.unreachable_rendezvous;
    event(t, "unreachable_rendezvous", {{"robot", r.id}, {"reason", e.what()}});
    cand = CandidateTrajectory{};
    cand.start_time = t;
    cand.dt = dt;
    cand.feasible = false;
  }
  cand.rendezvous = pred.point;
  cand.reserve = reserve;
  cand.landing_time = landing.landing_time;
  return cand;
}

void Simulation::begin_iteration(double t) {
  ++iteration_;
  iteration_open_ = true;
  iteration_start_ = t;
  deadline_ = t + cfg_.scheduler.nominal_horizon - cfg_.scheduler.decision_interval;
  central_ran_ = false;
  mobcontinue_received_ = false;
  expected_.clear();
  uploaded_.clear();

  for (std::size_t i = 0; i < cfg_.robot_additions.size(); ++i) {
    if (addition_done_[i] || cfg_.robot_additions[i] > t + kTimeEps) continue;
    addition_done_[i] = true;
    double min_flight = std::numeric_limits<double>::infinity();
    int current = 0;
    for (const auto& r : robots_) {
      if (r.mode == Mode::Removed) continue;
      ++current;
      min_flight = std::min(min_flight, remaining_flight_time(r.state.soc, cfg_.battery));
    }
    const double full = remaining_flight_time(cfg_.battery.capacity, cfg_.battery);
    min_flight = std::min(min_flight, full);
    const bool ok = current == 0 || can_add_robot(min_flight, current, cfg_.scheduler);
    if (!ok) {
      ++out_.counters.refused_additions;
      event(t, "robot_add_refused", {{"min_flight_time", min_flight}, {"robots", current}});
      continue;
    }
    Robot r;
    r.id = static_cast<int>(robots_.size()) + 1;
    r.state.position = charger_.position();
    r.state.soc = cfg_.battery.capacity;
    r.state.altitude = cfg_.scheduler.rendezvous_altitude;
    r.state.airborne = true;
    r.phase = lawnmower_loop_.samples() ? lawnmower_loop_.duration() * (r.id - 1) / out_.robot_columns : 0.0;
    robots_.push_back(r);
    ++out_.counters.accepted_additions;
    event(t, "robot_added", {{"robot", r.id}, {"min_flight_time", min_flight}, {"robots", current + 1}});
  }

  for (auto& r : robots_) {
    r.decided = false;
    r.pending.reset();
    if (!r.in_roster()) continue;
    r.memory.deadline = deadline_;
    r.upload_flight_time = remaining_flight_time(r.state.soc, cfg_.battery);
    if (r.mode == Mode::Active) r.pending = make_candidate(r, t, r.pending_reserve);
    expected_.push_back(r.id);
    bus_.send(r.id, kCentralNode, PayloadKind::CandidateUpload, iteration_, t);
  }
  if (expected_.empty() && central_up(t)) run_central(t);
}

void Simulation::run_central(double t) {
  central_ran_ = true;
  std::vector<Robot*> members;
  for (int id : expected_) {
    Robot& r = robots_[static_cast<std::size_t>(id - 1)];
    if (r.in_roster()) members.push_back(&r);
  }
  std::vector<const CandidateTrajectory*> candidates;
  std::vector<double> reserves;
  std::vector<double> flight_times;
  std::vector<char> exempt_storage;
  for (Robot* r : members) {
    const bool exempt = r->mode != Mode::Active;
    candidates.push_back(exempt || !r->pending ? nullptr : &*r->pending);
    reserves.push_back(r->pending_reserve);
    flight_times.push_back(r->upload_flight_time);
    exempt_storage.push_back(exempt);
  }
  std::unique_ptr<bool[]> exempt(new bool[members.size()]);
  for (std::size_t i = 0; i < members.size(); ++i) exempt[i] = exempt_storage[i] != 0;

  RmeschInput input{candidates, reserves, flight_times, std::span<const bool>(exempt.get(), members.size())};
  const RmeschDecision d = rmesch(input, cfg_.scheduler);
  if (d.retry) {
    ++out_.counters.retries;
    event(t, "retry", {{"iteration", iteration_}});
    return;
  }

  Json log;
  log["iteration"] = iteration_;
  log["t"] = iteration_start_;
  log["decided_at"] = t;
  auto roster = Json::array();
  for (auto pos : d.roster) roster.push_back(members[pos]->id);
  log["roster"] = roster;
  log["flags"] = d.flags;
  log["gap_violation"] = d.gap_violation;
  auto robots = Json::array();
  for (std::size_t i = 0; i < members.size(); ++i) {
    Json entry;
    entry["robot"] = members[i]->id;
    entry["flight_time"] = flight_times[i];
    entry["reserve"] = reserves[i];
    entry["exempt"] = exempt_storage[i] != 0;
    entry["commit"] = static_cast<bool>(d.commit[i]);
    entry["ret"] = d.return_index[i];
    robots.push_back(entry);
  }
  log["robots"] = robots;
  out_.decisions.push_back(log.dump());

  for (std::size_t i = 0; i < members.size(); ++i)
    bus_.send(kCentralNode, members[i]->id, PayloadKind::CommitDecision, iteration_, t, d.commit[i],
              d.return_index[i]);
  bus_.send(kCentralNode, kChargerNode, PayloadKind::MobContinue, iteration_, t);
}

void Simulation::deliver(double t) {
  for (;;) {
    const auto batch = bus_.deliver_until(t);
    if (batch.empty()) return;
    for (const Message& m : batch) {
      if (m.iteration != iteration_) continue;
      const double at = m.envelope.deliver_time;
      if (m.receiver == kCentralNode) {
        if (!central_up(at) || central_ran_) continue;
        uploaded_.push_back(m.sender);
        if (uploaded_.size() == expected_.size()) run_central(at);
      } else if (m.receiver == kChargerNode) {
        if (!m.envelope.received_by(deadline_)) continue;
        mobcontinue_received_ = true;
        if (halt_time_) {
          event(at, "charger_resume");
          halt_time_.reset();
          halted_ = false;
        }
      } else {
        Robot& r = robots_[static_cast<std::size_t>(m.receiver - 1)];
        if (!m.envelope.received_by(deadline_) || !r.in_roster() || r.decided) continue;
        apply_decision(r, m.return_index, m.commit, at);
      }
    }
  }
}

void Simulation::apply_decision(Robot& r, int ret, bool commit, double t) {
  r.decided = true;
  r.memory.return_index = ret;
  if (r.mode != Mode::Active) return;
  if (commit && r.pending && r.pending->feasible) {
    r.committed = std::move(r.pending);
    r.pending.reset();
    r.memory.has_committed = true;
    return;
  }
  start_return(r, t, "scheduled");
}

void Simulation::start_return(Robot& r, double t, const char* reason) {
  r.mode = Mode::Returning;
  if (r.committed) {
    r.touchdown_not_before = r.committed->end_time() + r.committed->landing_time;
  } else {
    r.landing = true;
    r.touchdown_not_before = t;
  }
  event(t, "return", {{"robot", r.id}, {"soc", r.state.soc}, {"reason", reason},
                      {"ret", r.memory.return_index}, {"touchdown_not_before", r.touchdown_not_before}});
}

void Simulation::close_iteration(double t) {
  iteration_open_ = false;
  const bool up = central_up(t);
  if (up && !central_ran_ && !expected_.empty()) {
    ++out_.counters.retries;
    event(t, "decision_missed", {{"iteration", iteration_}});
  }
  for (int id : expected_) {
    Robot& r = robots_[static_cast<std::size_t>(id - 1)];
    if (r.decided || r.mode != Mode::Active) continue;
    const RechargeableDecision d = onboard_rechargeable_decide(r.memory, std::nullopt, cfg_.scheduler);
    ++out_.counters.failsafe_activations;
    if (d.action == RechargeableAction::HoverThenShifted && r.committed) {
      r.hover_position = r.committed->reference_at(t).position;
      r.hover_until = t + d.hover_duration;
      r.committed = r.committed->shifted(d.shift);
    }
    start_return(r, t, d.action == RechargeableAction::HoverThenShifted ? "failsafe_shifted" : "failsafe_previous");
    event(t, "failsafe", {{"robot", r.id}, {"ret", r.memory.return_index}, {"hover", d.hover_duration}});
  }
  if (!mobcontinue_received_) {
    const ChargerDecision d = onboard_charger_decide(iteration_start_, deadline_, std::nullopt, cfg_.scheduler);
    if (!halt_time_) {
      halt_time_ = d.halt_time;
      event(t, "charger_halt_scheduled", {{"iteration_start", iteration_start_}, {"halt_time", d.halt_time}});
    }
  }
}

void Simulation::process_mission_events(double t) {
  for (std::size_t i = 0; i < cfg_.robot_removals.size(); ++i) {
    if (removal_done_[i] || cfg_.robot_removals[i].time > t + kTimeEps) continue;
    removal_done_[i] = true;
    Robot& r = robots_[static_cast<std::size_t>(cfg_.robot_removals[i].robot - 1)];
    if (r.mode == Mode::Removed) continue;
    r.mode = Mode::Removed;
    r.state.airborne = false;
    ++out_.counters.removals;
    event(t, "robot_removed", {{"robot", r.id}});
  }
  const bool up = central_up(t);
  if (up != was_up_) event(t, up ? "central_recovered" : "central_failed");
  was_up_ = up;
}

Vec2 Simulation::charger_command(double t) const {
  const ChargerPose ref = charger_nominal_.pose_at(t);
  const Vec2 ff = charger_nominal_.control_at(t);
  const double c = std::cos(charger_.heading);
  const double s = std::sin(charger_.heading);
  const double dx = ref.x - charger_.x;
  const double dy = ref.y - charger_.y;
  const double ex = c * dx + s * dy;
  const double ey = -s * dx + c * dy;
  const double eth = wrap(ref.heading - charger_.heading);
  const PursuitGains& g = cfg_.charger_gains;
  const double v = std::clamp(ff.x() * std::cos(eth) + 1.0 * ex, 0.0, 1.5 * g.max_speed);
  const double w = std::clamp(ff.y() + ff.x() * 4.0 * ey + 2.0 * std::sin(eth), -1.5 * g.max_turn_rate,
                              1.5 * g.max_turn_rate);
  return {v, w};
}

void Simulation::step_charger(double t) {
  if (halt_time_ && !halted_ && t + kTimeEps >= *halt_time_) {
    halted_ = true;
    ++out_.counters.charger_halts;
    out_.charger_halt_times.push_back(t);
    event(t, "charger_halted", {{"x", charger_.x}, {"y", charger_.y}});
  }
  const Vec2 cmd = halted_ ? Vec2::Zero() : charger_command(t);
  charger_ = mecl::step_charger(charger_, cmd, cfg_.charger_noise.process, cfg_.dt, charger_rng_);
  charger_.x = std::clamp(charger_.x, 0.0, cfg_.length_x);
  charger_.y = std::clamp(charger_.y, 0.0, cfg_.length_y);
  last_command_ = cmd;

  estimate_ = ekf_predict(estimate_, cmd, cfg_.dt, cfg_.charger_noise.process);
  const Eigen::LLT<Mat2> chol(cfg_.charger_noise.measurement);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec2 z(normal(measurement_rng_), normal(measurement_rng_));
  const Vec2 y = charger_.position() + chol.matrixL() * z;
  estimate_ = ekf_update(estimate_, y, cfg_.charger_noise.measurement);
}

void Simulation::step_robot(Robot& r, double t, const Vec2& repulsion) {
  const BatteryModel& battery = cfg_.battery;
  const double dt = cfg_.dt;
  if (r.mode == Mode::Charging) {
    r.state.position = charger_.position();
    if (cfg_.scheduler.charge_time > 0.0)
      r.state.soc = std::min(battery.capacity,
                             r.state.soc + battery.capacity / cfg_.scheduler.charge_time * dt);
    if (t + dt + kTimeEps >= r.release_time && central_up(t + dt)) {
      r.mode = Mode::Active;
      r.state.airborne = true;
      r.state.altitude = cfg_.scheduler.rendezvous_altitude;
      r.state.velocity = Vec2::Zero();
      r.committed.reset();
      r.pending.reset();
      r.landing = false;
      r.hover_until = -1.0;
      r.memory = FailsafeMemory{};
      event(t + dt, "takeoff", {{"robot", r.id}, {"soc", r.state.soc}});
    }
    return;
  }

  if (r.mode == Mode::Returning && r.landing) {
    const Vec3 here(r.state.position.x(), r.state.position.y(), r.state.altitude);
    const Vec3 target(charger_.x, charger_.y, 0.0);
    const Vec3 gap = target - here;
    const double reach = cfg_.scheduler.max_speed * dt;
    const Vec3 next = gap.norm() <= reach ? target : Vec3(here + gap * (reach / gap.norm()));
    r.state.velocity = (next.head<2>() - here.head<2>()) / dt;
    r.state.position = next.head<2>();
    r.state.altitude = next.z();
    r.state.soc -= battery.discharge_rate * dt;
    const double horizontal = (r.state.position - charger_.position()).norm();
    if (horizontal <= kTouchdownRadius && r.state.altitude <= 1e-9 && t + dt + kTimeEps >= r.touchdown_not_before) {
      const double when = t + dt;
      ReturnEvent ev{r.id, when, r.state.soc, r.state.soc / battery.capacity};
      out_.returns.push_back(ev);
      ++out_.counters.returns;
      const double separation = when - last_touchdown_;
      if (separation <= cfg_.scheduler.gap()) {
        ++out_.counters.gap_violations;
        event(when, "gap_violation", {{"robot", r.id}, {"separation", separation}});
      }
      last_touchdown_ = when;
      event(when, "touchdown", {{"robot", r.id}, {"soc", r.state.soc}, {"soc_fraction", ev.soc_fraction}});
      r.mode = Mode::Charging;
      r.state.airborne = false;
      r.state.velocity = Vec2::Zero();
      r.landing = false;
      r.below_min = false;
      r.committed.reset();
      if (cfg_.scheduler.charge_time == 0.0) r.state.soc = battery.capacity;
      r.release_time = when + cfg_.scheduler.gap();
    }
  } else {
    ReferenceState ref;
    if (r.mode == Mode::Returning && t < r.hover_until - kTimeEps) {
      ref = {r.hover_position, Vec2::Zero(), Vec2::Zero()};
    } else if (r.committed) {
      ref = r.committed->reference_at(t);
    } else {
      ref = nominal_reference(r, t);
    }
    Vec2 u = tracking_controller(r.state, ref, cfg_.tracking) + repulsion;
    const double n = u.norm();
    if (n > cfg_.tracking.u_max) u *= cfg_.tracking.u_max / n;
    r.state = step_rechargeable(r.state, u, battery, dt);
    if (r.mode == Mode::Returning && r.committed && t + dt + kTimeEps >= r.committed->end_time()) r.landing = true;
  }

  if (r.state.airborne && r.state.soc < battery.e_min && !r.below_min) {
    r.below_min = true;
    ++out_.counters.energy_violations;
    event(t + dt, "energy_violation", {{"robot", r.id}, {"soc", r.state.soc}});
  }
}

void Simulation::step_dynamics(double t) {
  const double reach = 2.0 * cfg_.planner.d_min;
  std::vector<Vec2> repulsion(robots_.size(), Vec2::Zero());
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    const Robot& a = robots_[i];
    if (!a.flying() || a.landing) continue;
    for (std::size_t j = 0; j < robots_.size(); ++j) {
      const Robot& b = robots_[j];
      if (i == j || !b.flying() || b.landing) continue;
      const Vec2 d = a.state.position - b.state.position;
      const double dist = d.norm();
      if (dist >= reach || dist < 1e-9) continue;
      repulsion[i] += cfg_.repulsion_gain * (1.0 / (dist * dist) - 1.0 / (reach * reach)) * d / dist;
    }
  }
  for (std::size_t i = 0; i < robots_.size(); ++i)
    if (robots_[i].mode != Mode::Removed) step_robot(robots_[i], t, repulsion[i]);
  step_charger(t);

  std::vector<Vec2> sensing;
  for (const auto& r : robots_)
    if (r.flying()) sensing.push_back(r.state.position);
  step_environment_inplace(grid_, sensing, sensor_, cfg_.dt);
}

void Simulation::record(double t) {
  out_.time.push_back(t);
  out_.deficit.push_back(mean_clarity_deficit(grid_));
  std::vector<double> soc(static_cast<std::size_t>(out_.robot_columns), kNaN);
  std::vector<double> dist(static_cast<std::size_t>(out_.robot_columns), kNaN);
  double min_pair = kNaN;
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    const Robot& r = robots_[i];
    if (r.mode == Mode::Removed) continue;
    soc[i] = r.state.soc;
    dist[i] = (r.state.position - charger_.position()).norm();
    if (!r.flying()) continue;
    for (std::size_t j = i + 1; j < robots_.size(); ++j) {
      if (!robots_[j].flying()) continue;
      const double d = (r.state.position - robots_[j].state.position).norm();
      if (!(d >= min_pair)) min_pair = d;
    }
  }
  if (std::isfinite(min_pair) && min_pair < cfg_.planner.d_min) ++out_.counters.close_approaches;
  out_.soc.push_back(std::move(soc));
  out_.distance.push_back(std::move(dist));
  out_.min_pair_distance.push_back(min_pair);
}

MetricsRecord Simulation::run() {
  const double dt = cfg_.dt;
  const auto total = std::lround(cfg_.duration / dt);
  const auto plan_every = std::lround(cfg_.planner.horizon / dt);
  const auto decide_every = std::lround(cfg_.scheduler.decision_interval / dt);
  const auto record_every = std::lround(cfg_.record_interval / dt);
  for (long k = 0; k <= total; ++k) {
    const double t = dt * static_cast<double>(k);
    process_mission_events(t);
    if (k % plan_every == 0) replan(t);
    if (k % decide_every == 0) begin_iteration(t);
    deliver(t);
    if (iteration_open_ && t + kTimeEps >= deadline_) close_iteration(t);
    const bool done = cfg_.stop_after_returns > 0 && out_.counters.returns >= cfg_.stop_after_returns;
    if (k % record_every == 0 || k == total || done) record(t);
    if (k == total || done) break;
    step_dynamics(t);
  }
  out_.final_clarity = grid_.clarity();
  event(out_.time.back(), "end", {{"returns", out_.counters.returns},
                                  {"gap_violations", out_.counters.gap_violations},
                                  {"energy_violations", out_.counters.energy_violations}});
  return std::move(out_);
}

}  // namespace

MetricsRecord run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Simulation sim(cfg);
  return sim.run();
}

}  // namespace mecl
