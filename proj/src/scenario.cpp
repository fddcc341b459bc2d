#include "mecl/scenario.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mecl {

namespace {

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;
using Getter = std::function<std::string(const ScenarioConfig&)>;

struct Field {
  std::string section;
  std::string key;
  Setter set;
  Getter get;
};

std::string trim(const std::string& s) { return boost::algorithm::trim_copy(s); }

double to_double(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  }
  if (used != v.size()) throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  return out;
}

long to_integer(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::floor(v)) throw ConfigError(fmt::format("{}: '{}' is not an integer", key, trim(text)));
  return static_cast<long>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string v = boost::algorithm::to_lower_copy(trim(text));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, trim(text)));
}

std::vector<std::string> split(const std::string& text, const char* sep) {
  std::vector<std::string> parts;
  const std::string t = trim(text);
  if (t.empty()) return parts;
  boost::algorithm::split(parts, t, boost::algorithm::is_any_of(sep));
  for (auto& p : parts) p = trim(p);
  return parts;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ",")) out.push_back(to_double(key, p));
  return out;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string join_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out;
}

template <class T>
Field number(const char* section, const char* key, T ScenarioConfig::*member) {
  const std::string name = fmt::format("{}.{}", section, key);
  return {section, key,
          [name, member](ScenarioConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*member = to_double(name, v);
            } else {
              const long n = to_integer(name, v);
              if constexpr (std::is_unsigned_v<T>) {
                if (n < 0) throw ConfigError(fmt::format("{} must be >= 0", name));
              }
              c.*member = static_cast<T>(n);
            }
          },
          [member](const ScenarioConfig& c) { return fmt::format("{}", c.*member); }};
}

template <class S, class T>
Field nested(const char* section, const char* key, S ScenarioConfig::*outer, T S::*inner) {
  const std::string name = fmt::format("{}.{}", section, key);
  return {section, key,
          [name, outer, inner](ScenarioConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*outer.*inner = to_double(name, v);
            } else {
              c.*outer.*inner = static_cast<T>(to_integer(name, v));
            }
          },
          [outer, inner](const ScenarioConfig& c) { return fmt::format("{}", c.*outer.*inner); }};
}

Field boolean(const char* section, const char* key, bool ScenarioConfig::*member) {
  const std::string name = fmt::format("{}.{}", section, key);
  return {section, key, [name, member](ScenarioConfig& c, const std::string& v) { c.*member = to_bool(name, v); },
          [member](const ScenarioConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(number("domain", "length_x", &ScenarioConfig::length_x));
    f.push_back(number("domain", "length_y", &ScenarioConfig::length_y));
    f.push_back(number("domain", "width_cells", &ScenarioConfig::width_cells));
    f.push_back(number("domain", "height_cells", &ScenarioConfig::height_cells));

    f.push_back({"environment", "preset",
                 [](ScenarioConfig& c, const std::string& v) { c.preset = trim(v); },
                 [](const ScenarioConfig& c) { return c.preset; }});
    f.push_back(number("environment", "initial_clarity", &ScenarioConfig::initial_clarity));

    f.push_back(number("robots", "count", &ScenarioConfig::robot_count));
    f.push_back({"robots", "start_positions",
                 [](ScenarioConfig& c, const std::string& v) {
                   c.start_positions.clear();
                   for (const auto& p : split(v, ";")) {
                     const auto xy = to_list("robots.start_positions", p);
                     if (xy.size() != 2)
                       throw ConfigError(fmt::format("robots.start_positions: '{}' is not an x,y pair", p));
                     c.start_positions.emplace_back(xy[0], xy[1]);
                   }
                 },
                 [](const ScenarioConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.start_positions.size(); ++i)
                     out += fmt::format("{}{}, {}", i ? "; " : "", num(c.start_positions[i].x()),
                                        num(c.start_positions[i].y()));
                   return out;
                 }});
    f.push_back({"robots", "initial_soc",
                 [](ScenarioConfig& c, const std::string& v) { c.initial_soc = to_list("robots.initial_soc", v); },
                 [](const ScenarioConfig& c) { return join_list(c.initial_soc); }});
    f.push_back(boolean("robots", "allow_overcapacity", &ScenarioConfig::allow_overcapacity));
    f.push_back(number("robots", "repulsion_gain", &ScenarioConfig::repulsion_gain));

    f.push_back(nested("battery", "discharge_rate", &ScenarioConfig::battery, &BatteryModel::discharge_rate));
    f.push_back(nested("battery", "capacity", &ScenarioConfig::battery, &BatteryModel::capacity));
    f.push_back(nested("battery", "e_min", &ScenarioConfig::battery, &BatteryModel::e_min));

    f.push_back(nested("sensor", "footprint_radius", &ScenarioConfig::sensor, &SensorModel::footprint_radius));
    f.push_back(nested("sensor", "gain", &ScenarioConfig::sensor, &SensorModel::gain));
    f.push_back(nested("sensor", "noise_variance", &ScenarioConfig::sensor, &SensorModel::noise_variance));

    f.push_back(nested("tracking", "kp", &ScenarioConfig::tracking, &TrackingGains::kp));
    f.push_back(nested("tracking", "kd", &ScenarioConfig::tracking, &TrackingGains::kd));
    f.push_back(nested("tracking", "u_max", &ScenarioConfig::tracking, &TrackingGains::u_max));

    f.push_back(nested("scheduler", "T_R", &ScenarioConfig::scheduler, &SchedulerConfig::rendezvous_horizon));
    f.push_back(nested("scheduler", "T_E", &ScenarioConfig::scheduler, &SchedulerConfig::decision_interval));
    f.push_back(nested("scheduler", "T_N", &ScenarioConfig::scheduler, &SchedulerConfig::nominal_horizon));
    f.push_back(nested("scheduler", "T_ch", &ScenarioConfig::scheduler, &SchedulerConfig::charge_time));
    f.push_back(nested("scheduler", "T_bf", &ScenarioConfig::scheduler, &SchedulerConfig::buffer_time));
    f.push_back(nested("scheduler", "altitude", &ScenarioConfig::scheduler, &SchedulerConfig::rendezvous_altitude));
    f.push_back(nested("scheduler", "v_max", &ScenarioConfig::scheduler, &SchedulerConfig::max_speed));
    f.push_back(
        nested("scheduler", "reserve_multiplier", &ScenarioConfig::scheduler, &SchedulerConfig::reserve_multiplier));
    f.push_back(boolean("scheduler", "failsafe_budget", &ScenarioConfig::failsafe_budget));

    f.push_back({"planner", "mode",
                 [](ScenarioConfig& c, const std::string& v) { c.planner_mode = planner_mode_from_string(trim(v)); },
                 [](const ScenarioConfig& c) { return std::string(to_string(c.planner_mode)); }});
    f.push_back(nested("planner", "T_H", &ScenarioConfig::planner, &PlannerConfig::horizon));
    f.push_back(nested("planner", "dt", &ScenarioConfig::planner, &PlannerConfig::dt));
    f.push_back(nested("planner", "iterations", &ScenarioConfig::planner, &PlannerConfig::iterations));
    f.push_back(nested("planner", "step_size", &ScenarioConfig::planner, &PlannerConfig::step_size));
    f.push_back(nested("planner", "control_weight", &ScenarioConfig::planner, &PlannerConfig::control_weight));
    f.push_back(nested("planner", "collision_weight", &ScenarioConfig::planner, &PlannerConfig::collision_weight));
    f.push_back(nested("planner", "boundary_weight", &ScenarioConfig::planner, &PlannerConfig::boundary_weight));
    f.push_back(nested("planner", "speed_weight", &ScenarioConfig::planner, &PlannerConfig::speed_weight));
    f.push_back(nested("planner", "speed_limit", &ScenarioConfig::planner, &PlannerConfig::speed_limit));
    f.push_back(nested("planner", "d_min", &ScenarioConfig::planner, &PlannerConfig::d_min));
    f.push_back(nested("planner", "u_max", &ScenarioConfig::planner, &PlannerConfig::u_max));
    f.push_back(number("planner", "modes", &ScenarioConfig::modes));
    f.push_back(number("planner", "tisd_epsilon", &ScenarioConfig::tisd_epsilon));
    f.push_back(number("planner", "lawnmower_spacing", &ScenarioConfig::lawnmower_spacing));
    f.push_back(number("planner", "lawnmower_speed", &ScenarioConfig::lawnmower_speed));

    f.push_back(nested("charger", "x", &ScenarioConfig::charger_start, &ChargerPose::x));
    f.push_back(nested("charger", "y", &ScenarioConfig::charger_start, &ChargerPose::y));
    f.push_back(nested("charger", "heading", &ScenarioConfig::charger_start, &ChargerPose::heading));
    f.push_back(nested("charger", "max_speed", &ScenarioConfig::charger_gains, &PursuitGains::max_speed));
    f.push_back(nested("charger", "max_turn_rate", &ScenarioConfig::charger_gains, &PursuitGains::max_turn_rate));
    f.push_back(nested("charger", "speed_gain", &ScenarioConfig::charger_gains, &PursuitGains::speed_gain));
    f.push_back(nested("charger", "turn_gain", &ScenarioConfig::charger_gains, &PursuitGains::turn_gain));
    f.push_back({"charger", "process_noise",
                 [](ScenarioConfig& c, const std::string& v) {
                   const auto d = to_list("charger.process_noise", v);
                   if (d.size() != 3) throw ConfigError("charger.process_noise needs 3 diagonal entries");
                   c.charger_noise.process = Vec3(d[0], d[1], d[2]).asDiagonal();
                 },
                 [](const ScenarioConfig& c) {
                   const Vec3 d = c.charger_noise.process.diagonal();
                   return join_list({d.x(), d.y(), d.z()});
                 }});
    f.push_back({"charger", "measurement_noise",
                 [](ScenarioConfig& c, const std::string& v) {
                   const auto d = to_list("charger.measurement_noise", v);
                   if (d.size() != 2) throw ConfigError("charger.measurement_noise needs 2 diagonal entries");
                   c.charger_noise.measurement = Vec2(d[0], d[1]).asDiagonal();
                 },
                 [](const ScenarioConfig& c) {
                   const Vec2 d = c.charger_noise.measurement.diagonal();
                   return join_list({d.x(), d.y()});
                 }});
    f.push_back({"charger", "prediction",
                 [](ScenarioConfig& c, const std::string& v) {
                   const auto t = trim(v);
                   if (t == "nominal") {
                     c.prediction = ChargerPrediction::Nominal;
                   } else if (t == "hold") {
                     c.prediction = ChargerPrediction::HoldLast;
                   } else {
                     throw ConfigError(fmt::format("charger.prediction: '{}' is not nominal|hold", t));
                   }
                 },
                 [](const ScenarioConfig& c) {
                   return std::string(c.prediction == ChargerPrediction::Nominal ? "nominal" : "hold");
                 }});

    f.push_back(number("comm", "latency_min", &ScenarioConfig::latency_min));
    f.push_back(number("comm", "latency_max", &ScenarioConfig::latency_max));
    f.push_back(number("comm", "drop_probability", &ScenarioConfig::drop_probability));
    f.push_back({"comm", "failures",
                 [](ScenarioConfig& c, const std::string& v) {
                   c.failures.clear();
                   for (const auto& w : split(v, ";")) {
                     const auto parts = split(w, ":");
                     if (parts.size() != 2)
                       throw ConfigError(fmt::format("comm.failures: '{}' is not start:duration", w));
                     FailureWindow fw;
                     fw.start = to_double("comm.failures", parts[0]);
                     fw.duration = parts[1] == "permanent" ? -1.0 : to_double("comm.failures", parts[1]);
                     c.failures.push_back(fw);
                   }
                 },
                 [](const ScenarioConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.failures.size(); ++i)
                     out += fmt::format("{}{}:{}", i ? "; " : "", num(c.failures[i].start),
                                        c.failures[i].duration < 0.0 ? "permanent" : num(c.failures[i].duration));
                   return out;
                 }});

    f.push_back({"events", "add_robots",
                 [](ScenarioConfig& c, const std::string& v) { c.robot_additions = to_list("events.add_robots", v); },
                 [](const ScenarioConfig& c) { return join_list(c.robot_additions); }});
    f.push_back({"events", "remove_robots",
                 [](ScenarioConfig& c, const std::string& v) {
                   c.robot_removals.clear();
                   for (const auto& r : split(v, ",")) {
                     const auto parts = split(r, "@");
                     if (parts.size() != 2)
                       throw ConfigError(fmt::format("events.remove_robots: '{}' is not id@time", r));
                     c.robot_removals.push_back({static_cast<int>(to_integer("events.remove_robots", parts[0])),
                                                 to_double("events.remove_robots", parts[1])});
                   }
                 },
                 [](const ScenarioConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.robot_removals.size(); ++i)
                     out += fmt::format("{}{}@{}", i ? ", " : "", c.robot_removals[i].robot,
                                        num(c.robot_removals[i].time));
                   return out;
                 }});

    f.push_back(number("sim", "dt", &ScenarioConfig::dt));
    f.push_back(number("sim", "duration", &ScenarioConfig::duration));
    f.push_back(number("sim", "record_interval", &ScenarioConfig::record_interval));
    f.push_back(number("sim", "seed", &ScenarioConfig::seed));
    f.push_back(number("sim", "stop_after_returns", &ScenarioConfig::stop_after_returns));
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

bool known_section(const std::string& section) {
  for (const auto& f : fields())
    if (f.section == section) return true;
  return false;
}

bool is_multiple(double value, double step) {
  const double r = value / step;
  return std::abs(r - std::round(r)) < 1e-6;
}

double bump(const Vec2& p, double cx, double cy, double sigma) {
  const double d2 = (p.x() - cx) * (p.x() - cx) + (p.y() - cy) * (p.y() - cy);
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

}  // namespace

const char* to_string(PlannerMode mode) {
  switch (mode) {
    case PlannerMode::GenTisd:
      return "gen_tisd";
    case PlannerMode::UniformTisd:
      return "uniform_tisd";
    case PlannerMode::Lawnmower:
      return "lawnmower";
  }
  return "gen_tisd";
}

PlannerMode planner_mode_from_string(const std::string& s) {
  if (s == "gen_tisd") return PlannerMode::GenTisd;
  if (s == "uniform_tisd") return PlannerMode::UniformTisd;
  if (s == "lawnmower") return PlannerMode::Lawnmower;
  throw ConfigError(fmt::format("planner.mode: '{}' is not gen_tisd|uniform_tisd|lawnmower", s));
}

double ScenarioConfig::footprint_radius() const {
  if (sensor.footprint_radius > 0.0) return sensor.footprint_radius;
  return std::hypot(length_x / static_cast<double>(width_cells), length_y / static_cast<double>(height_cells));
}

double ScenarioConfig::min_initial_flight_time() const {
  double soc = 1.0;
  for (double s : initial_soc) soc = std::min(soc, s);
  return remaining_flight_time(soc * battery.capacity, battery);
}

void ScenarioConfig::validate() const {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  const auto wrap = [](auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };
  require(length_x > 0.0, "domain.length_x must be > 0");
  require(length_y > 0.0, "domain.length_y must be > 0");
  require(width_cells >= 1, "domain.width_cells must be >= 1");
  require(height_cells >= 1, "domain.height_cells must be >= 1");
  require(preset == "env1" || preset == "env2" || preset == "env3" || preset == "env4" || preset == "env5",
          fmt::format("environment.preset: '{}' is not one of env1..env5", preset));
  require(initial_clarity >= 0.0 && initial_clarity < 1.0, "environment.initial_clarity must be in [0, 1)");

  require(robot_count >= 1, "robots.count must be >= 1");
  require(start_positions.empty() || start_positions.size() == static_cast<std::size_t>(robot_count),
          fmt::format("robots.start_positions has {} entries, robots.count is {}", start_positions.size(), robot_count));
  for (std::size_t i = 0; i < start_positions.size(); ++i) {
    const Vec2& p = start_positions[i];
    require(p.x() >= 0.0 && p.x() <= length_x && p.y() >= 0.0 && p.y() <= length_y,
            fmt::format("robots.start_positions[{}] lies outside the domain", i));
  }
  require(initial_soc.empty() || initial_soc.size() == static_cast<std::size_t>(robot_count),
          fmt::format("robots.initial_soc has {} entries, robots.count is {}", initial_soc.size(), robot_count));
  for (std::size_t i = 0; i < initial_soc.size(); ++i)
    require(initial_soc[i] > 0.0 && initial_soc[i] <= 1.0, fmt::format("robots.initial_soc[{}] must be in (0, 1]", i));
  require(repulsion_gain >= 0.0, "robots.repulsion_gain must be >= 0");

  wrap([&] { battery.validate(); });
  require(battery.capacity > 0.0, "battery.capacity must be > 0");
  SensorModel s = sensor;
  s.footprint_radius = footprint_radius();
  require(sensor.footprint_radius >= 0.0, "sensor.footprint_radius must be >= 0");
  wrap([&] { s.validate(); });
  require(tracking.kp > 0.0 && tracking.kd > 0.0, "tracking.kp and tracking.kd must be > 0");
  require(tracking.u_max > 0.0, "tracking.u_max must be > 0");

  wrap([&] { scheduler.validate(); });
  wrap([&] { planner.validate(); });
  require(scheduler.rendezvous_horizon < planner.horizon, "scheduler.T_R must be < planner.T_H");
  require(scheduler.nominal_horizon > scheduler.decision_interval,
          "scheduler.T_N must be > scheduler.T_E so the decision deadline follows the iteration start");
  require(modes >= 1, "planner.modes must be >= 1");
  require(tisd_epsilon > 0.0 && tisd_epsilon < 1.0, "planner.tisd_epsilon must be in (0, 1)");
  require(lawnmower_spacing > 0.0, "planner.lawnmower_spacing must be > 0");
  require(lawnmower_speed > 0.0, "planner.lawnmower_speed must be > 0");

  require(charger_start.x >= 0.0 && charger_start.x <= length_x && charger_start.y >= 0.0 &&
              charger_start.y <= length_y,
          "charger.x, charger.y lie outside the domain");
  require(charger_gains.max_speed > 0.0, "charger.max_speed must be > 0");
  require(charger_gains.max_turn_rate > 0.0, "charger.max_turn_rate must be > 0");
  wrap([&] { charger_noise.validate(); });

  require(latency_min >= 0.0, "comm.latency_min must be >= 0");
  require(latency_max >= latency_min, "comm.latency_max must be >= comm.latency_min");
  require(drop_probability >= 0.0 && drop_probability <= 1.0, "comm.drop_probability must be in [0, 1]");
  for (std::size_t i = 0; i < failures.size(); ++i) {
    require(failures[i].start >= 0.0, fmt::format("comm.failures[{}] starts before 0", i));
    require(failures[i].duration < 0.0 || failures[i].duration > 0.0,
            fmt::format("comm.failures[{}] has zero duration", i));
  }
  for (std::size_t i = 0; i < robot_additions.size(); ++i)
    require(robot_additions[i] >= 0.0, fmt::format("events.add_robots[{}] must be >= 0", i));
  for (std::size_t i = 0; i < robot_removals.size(); ++i) {
    require(robot_removals[i].robot >= 1 && robot_removals[i].robot <= robot_count,
            fmt::format("events.remove_robots[{}] names robot {} which does not exist at start", i,
                        robot_removals[i].robot));
    require(robot_removals[i].time >= 0.0, fmt::format("events.remove_robots[{}] time must be >= 0", i));
  }

  require(dt > 0.0, "sim.dt must be > 0");
  require(duration > 0.0, "sim.duration must be > 0");
  require(record_interval > 0.0 && is_multiple(record_interval, dt), "sim.record_interval must be a multiple of sim.dt");
  require(is_multiple(scheduler.decision_interval, dt), "scheduler.T_E must be a multiple of sim.dt");
  require(is_multiple(scheduler.nominal_horizon, dt), "scheduler.T_N must be a multiple of sim.dt");
  require(is_multiple(planner.horizon, dt), "planner.T_H must be a multiple of sim.dt");
  require(is_multiple(planner.horizon, scheduler.decision_interval), "planner.T_H must be a multiple of scheduler.T_E");
  require(stop_after_returns >= 0, "sim.stop_after_returns must be >= 0");

  if (!allow_overcapacity) {
    const int supported = max_supported_robots(min_initial_flight_time(), scheduler);
    require(robot_count <= supported,
            fmt::format("robots.count {} exceeds the {} robots the initial flight time supports "
                        "(set robots.allow_overcapacity to override)",
                        robot_count, supported));
  }
}

std::string ScenarioConfig::to_text() const {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      out += fmt::format("{}[{}]\n", section.empty() ? "" : "\n", f.section);
      section = f.section;
    }
    out += fmt::format("{} = {}\n", f.key, f.get(*this));
  }
  return out;
}

ScenarioConfig parse_scenario(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("scenario line {}: {}", e.line(), e.message()));
  }
  ScenarioConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(fmt::format("key '{}' must sit inside a [section]", section));
    if (!known_section(section)) throw ConfigError(fmt::format("unknown section [{}]", section));
    for (const auto& [key, value] : body) {
      const Field* f = find_field(section, key);
      if (!f) throw ConfigError(fmt::format("unknown key '{}.{}'", section, key));
      f->set(cfg, value.data());
    }
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open scenario file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

void apply_override(ScenarioConfig& cfg, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ConfigError(fmt::format("override '{}' is not section.key", dotted_key));
  const Field* f = find_field(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  if (!f) throw ConfigError(fmt::format("unknown key '{}'", dotted_key));
  f->set(cfg, value);
}

EnvironmentGrid make_environment(const std::string& preset, std::size_t width_cells, std::size_t height_cells,
                                 double length_x, double length_y, double initial_clarity) {
  EnvironmentGrid grid(width_cells, height_cells, length_x, length_y);
  grid.fill_clarity(initial_clarity);
  const double sx = length_x / 10.0;
  const double sy = length_y / 10.0;
  const double s = std::min(sx, sy);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec2 p = grid.cell_center(i);
    double q_noise = 0.0;
    double target = 0.0;
    if (preset == "env1") {
      target = 0.35 + 0.4 * bump(p, 3 * sx, 7 * sy, 2 * s) + 0.2 * bump(p, 7 * sx, 3 * sy, 1.5 * s);
    } else if (preset == "env2") {
      q_noise = 0.01 + 0.05 * bump(p, 7 * sx, 7 * sy, 2 * s);
      target = 0.4 + 0.3 * bump(p, 3 * sx, 3 * sy, 2 * s);
    } else if (preset == "env3") {
      q_noise = 0.001 + 0.01 * p.x() / length_x;
      target = 0.5;
    } else if (preset == "env4") {
      q_noise = 0.005;
      target = 0.3 + 0.4 * bump(p, 2.5 * sx, 7.5 * sy, 1.5 * s) + 0.4 * bump(p, 7.5 * sx, 2.5 * sy, 1.5 * s);
    } else if (preset == "env5") {
      const double band = std::abs(p.y() - 0.5 * length_y) < 0.15 * length_y ? 1.0 : 0.0;
      q_noise = 0.002 + 0.015 * band;
      const double r = (p - Vec2(5 * sx, 5 * sy)).norm();
      target = 0.3 + 0.4 * std::exp(-(r - 3.0 * s) * (r - 3.0 * s) / (2.0 * s * s));
    } else {
      throw ConfigError(fmt::format("environment.preset: '{}' is not one of env1..env5", preset));
    }
    grid.process_noise()[i] = q_noise;
    grid.target()[i] = std::min(target, 0.9);
  }
  grid.validate();
  return grid;
}

}  // namespace mecl
