#include "mecl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

#include "mecl/simulation.hpp"

namespace mecl {

std::vector<double> lawnmower_line_offsets(double length, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("lawnmower spacing must be > 0");
  if (!(length > 0.0)) throw std::invalid_argument("domain length must be > 0");
  std::vector<double> out;
  for (double y = 0.5 * spacing; y < length - 1e-12; y += spacing) out.push_back(y);
  if (out.empty()) out.push_back(0.5 * length);
  return out;
}

std::vector<Vec2> lawnmower_waypoints(double length_x, double length_y, double spacing) {
  if (!(length_x > 0.0)) throw std::invalid_argument("domain length must be > 0");
  const auto lines = lawnmower_line_offsets(length_y, spacing);
  std::vector<Vec2> up;
  for (std::size_t m = 0; m < lines.size(); ++m) {
    const bool forward = m % 2 == 0;
    up.emplace_back(forward ? 0.0 : length_x, lines[m]);
    up.emplace_back(forward ? length_x : 0.0, lines[m]);
  }
  std::vector<Vec2> loop = up;
  for (auto it = up.rbegin() + 1; it != up.rend(); ++it) loop.push_back(*it);
  return loop;
}

Trajectory lawnmower_tisd_free_reference(double length_x, double length_y, double spacing, double speed, double dt) {
  if (!(speed > 0.0)) throw std::invalid_argument("lawnmower speed must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const auto points = lawnmower_waypoints(length_x, length_y, spacing);
  std::vector<double> arc{0.0};
  for (std::size_t i = 1; i < points.size(); ++i) arc.push_back(arc.back() + (points[i] - points[i - 1]).norm());
  const double period = arc.back() / speed;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(period / dt)));

  Trajectory tr;
  tr.dt = period / static_cast<double>(steps);
  std::size_t seg = 1;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double s = i == steps ? arc.back() : speed * tr.dt * static_cast<double>(i);
    while (seg + 1 < points.size() && arc[seg] < s) ++seg;
    const double len = arc[seg] - arc[seg - 1];
    const double f = len > 0.0 ? std::clamp((s - arc[seg - 1]) / len, 0.0, 1.0) : 0.0;
    const Vec2 dir = len > 0.0 ? Vec2((points[seg] - points[seg - 1]) / len) : Vec2::Zero();
    tr.position.push_back(points[seg - 1] + f * (points[seg] - points[seg - 1]));
    tr.velocity.push_back(dir * speed);
  }
  tr.control.assign(steps, Vec2::Zero());
  return tr;
}

ReferenceState lawnmower_reference_at(const Trajectory& loop, double t, double phase) {
  const double period = loop.duration();
  double tau = std::fmod(t + phase, period);
  if (tau < 0.0) tau += period;
  return {loop.position_at(loop.start_time + tau), loop.velocity_at(loop.start_time + tau), Vec2::Zero()};
}

std::string PlannerComparison::to_csv() const {
  std::string out = "t";
  for (const auto& m : modes) out += "," + m;
  out += '\n';
  for (std::size_t s = 0; s < time.size(); ++s) {
    out += fmt::format("{:.3f}", time[s]);
    for (const auto& series : deficit) out += fmt::format(",{:.9f}", series[s]);
    out += '\n';
  }
  return out;
}

std::string PlannerComparison::summary() const {
  std::string out = fmt::format("{:<14} {:>14} {:>18}\n", "mode", "final_deficit", "mean_final_half");
  for (std::size_t i = 0; i < modes.size(); ++i)
    out += fmt::format("{:<14} {:>14.6f} {:>18.6f}\n", modes[i], final_deficit[i], mean_final_half[i]);
  return out;
}

PlannerComparison compare_planners(const std::vector<ScenarioConfig>& cfgs) {
  if (cfgs.empty()) throw std::invalid_argument("no configurations to compare");
  const auto stripped = [](ScenarioConfig c) {
    c.planner_mode = PlannerMode::GenTisd;
    return c.to_text();
  };
  const std::string reference = stripped(cfgs.front());
  for (std::size_t i = 1; i < cfgs.size(); ++i) {
    if (stripped(cfgs[i]) != reference)
      throw std::invalid_argument(fmt::format("configuration {} differs from the first in more than planner.mode", i));
  }
  PlannerComparison out;
  for (const auto& cfg : cfgs) {
    const MetricsRecord rec = run_scenario(cfg);
    if (out.time.empty()) out.time = rec.time;
    if (rec.time.size() != out.time.size()) throw std::invalid_argument("runs produced misaligned time series");
    out.modes.emplace_back(to_string(cfg.planner_mode));
    out.deficit.push_back(rec.deficit);
    out.final_deficit.push_back(rec.final_deficit());
    out.mean_final_half.push_back(rec.mean_deficit_final_half());
  }
  return out;
}

}  // namespace mecl
