#include "mecl/clarity.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace mecl {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw std::invalid_argument(fmt::format("{} is not finite", name));
}

// Exponent above which e^{x} is replaced by the e^{-x} form of the closed solution.
constexpr double kLargeExponent = 30.0;

}  // namespace

void SensorModel::validate() const {
  if (!(footprint_radius > 0.0)) throw std::invalid_argument("sensor.footprint_radius must be > 0");
  if (!(gain > 0.0)) throw std::invalid_argument("sensor.gain must be > 0");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("sensor.noise_variance must be > 0");
}

ClarityParams ClarityParams::from_information(double information, double process_noise, double q0) {
  if (!(process_noise > 0.0)) throw std::invalid_argument("process noise must be > 0 for the closed form");
  if (!(information > 0.0)) throw std::invalid_argument("information rate must be > 0 for the closed form");
  return from_k(std::sqrt(information / process_noise), process_noise, q0);
}

ClarityParams ClarityParams::from_k(double k, double process_noise, double q0) {
  ClarityParams p;
  p.k = k;
  p.process_noise = process_noise;
  p.q_inf = k / (k + 1.0);
  p.gamma1 = p.q_inf - q0;
  p.gamma2 = p.gamma1 * (k - 1.0);
  p.gamma3 = (k - 1.0) * q0 - k;
  return p;
}

double clarity_rate(double q, std::span<const SensingTerm> terms, double process_noise) {
  require_finite(q, "q");
  require_finite(process_noise, "Q");
  double info = 0.0;
  for (const auto& t : terms) {
    require_finite(t.gain, "C");
    require_finite(t.noise_variance, "R");
    if (!(t.noise_variance > 0.0)) throw std::invalid_argument("R must be > 0");
    info += t.gain * t.gain / t.noise_variance;
  }
  return (1.0 - q) * (1.0 - q) * info - process_noise * q * q;
}

double clarity_closed_form(double t, double q0, double k, double process_noise) {
  require_finite(t, "t");
  require_finite(q0, "q0");
  require_finite(k, "k");
  require_finite(process_noise, "Q");
  if (t < 0.0) throw std::invalid_argument("t must be >= 0");
  if (!(k > 0.0)) throw std::invalid_argument("k must be > 0");
  if (!(process_noise > 0.0)) throw std::invalid_argument("closed form undefined for Q <= 0");
  if (t == 0.0) return q0;

  const auto p = ClarityParams::from_k(k, process_noise, q0);
  const double x = 2.0 * k * process_noise * t;
  double ratio = 0.0;
  if (x < kLargeExponent) {
    const double denom = p.gamma2 + p.gamma3 * std::exp(x);
    if (denom == 0.0 || !std::isfinite(denom)) throw std::domain_error("degenerate clarity closed form");
    ratio = 2.0 * p.gamma1 / denom;
  } else {
    const double decay = std::exp(-x);
    const double denom = p.gamma2 * decay + p.gamma3;
    if (denom == 0.0) throw std::domain_error("degenerate clarity closed form");
    ratio = 2.0 * p.gamma1 * decay / denom;
  }
  return p.q_inf * (1.0 + ratio);
}

double clarity_time_to(double q0, double q1, double k, double process_noise) {
  require_finite(q0, "q0");
  require_finite(q1, "q1");
  if (q1 <= q0) return 0.0;
  if (!(k > 0.0)) throw std::invalid_argument("k must be > 0");
  if (!(process_noise > 0.0)) throw std::invalid_argument("inverse undefined for Q <= 0");
  const auto p = ClarityParams::from_k(k, process_noise, q0);
  if (q1 >= p.q_inf) {
    throw UnattainableTarget(fmt::format("target clarity {} >= attainable {}", q1, p.q_inf));
  }
  const double e = (2.0 * p.gamma1 * p.q_inf / (q1 - p.q_inf) - p.gamma2) / p.gamma3;
  return std::max(0.0, std::log(e) / (2.0 * k * process_noise));
}

double clarity_noiseless(double t, double q0, double information) {
  if (information <= 0.0 || t <= 0.0) return q0;
  const double inv = 1.0 / (1.0 - q0) + information * t;
  return 1.0 - 1.0 / inv;
}

double clarity_noiseless_time_to(double q0, double q1, double information) {
  if (q1 <= q0) return 0.0;
  if (q1 >= 1.0) throw UnattainableTarget("target clarity must be < 1");
  if (!(information > 0.0)) throw UnattainableTarget("no information: target unattainable");
  return (1.0 / (1.0 - q1) - 1.0 / (1.0 - q0)) / information;
}

double clarity_decay(double t, double q0, double process_noise) {
  return q0 / (1.0 + process_noise * q0 * t);
}

double attainable_clarity(double information, double process_noise) {
  if (process_noise <= 0.0) return information > 0.0 ? 1.0 : 0.0;
  const double k = std::sqrt(information / process_noise);
  return k / (k + 1.0);
}

EnvironmentGrid::EnvironmentGrid(std::size_t width_cells, std::size_t height_cells, double length_x,
                                 double length_y)
    : width_(width_cells),
      height_(height_cells),
      length_x_(length_x),
      length_y_(length_y),
      clarity_(width_cells * height_cells, 0.0),
      process_noise_(width_cells * height_cells, 0.0),
      target_(width_cells * height_cells, 0.0) {
  if (width_cells == 0 || height_cells == 0) throw std::invalid_argument("grid must have cells");
  if (!(length_x > 0.0) || !(length_y > 0.0)) throw std::invalid_argument("domain lengths must be > 0");
}

Vec2 EnvironmentGrid::cell_center(std::size_t idx) const {
  const auto ix = idx % width_;
  const auto iy = idx / width_;
  return {(static_cast<double>(ix) + 0.5) * cell_dx(), (static_cast<double>(iy) + 0.5) * cell_dy()};
}

void EnvironmentGrid::fill_clarity(double q) { std::fill(clarity_.begin(), clarity_.end(), q); }
void EnvironmentGrid::fill_process_noise(double q) {
  std::fill(process_noise_.begin(), process_noise_.end(), q);
}
void EnvironmentGrid::fill_target(double q) { std::fill(target_.begin(), target_.end(), q); }

void EnvironmentGrid::validate() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(clarity_[i] >= 0.0 && clarity_[i] <= 1.0))
      throw std::invalid_argument(fmt::format("cell {} clarity {} outside [0,1]", i, clarity_[i]));
    if (!(process_noise_[i] >= 0.0) || !std::isfinite(process_noise_[i]))
      throw std::invalid_argument(fmt::format("cell {} process noise {} must be >= 0", i, process_noise_[i]));
    if (!(target_[i] >= 0.0 && target_[i] < 1.0))
      throw std::invalid_argument(fmt::format("cell {} target {} outside [0,1)", i, target_[i]));
  }
}

std::string EnvironmentGrid::to_csv() const {
  std::string out = "ix,iy,q,Q,target\n";
  for (std::size_t i = 0; i < size(); ++i) {
    out += fmt::format("{},{},{:.9g},{:.9g},{:.9g}\n", i % width_, i / width_, clarity_[i], process_noise_[i],
                       target_[i]);
  }
  return out;
}

void step_environment_inplace(EnvironmentGrid& grid, std::span<const Vec2> robot_positions,
                              const SensorModel& sensor, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  std::vector<unsigned> covering(grid.size(), 0);
  const double r = sensor.footprint_radius;
  const double dx = grid.cell_dx();
  const double dy = grid.cell_dy();
  const auto clamp_index = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
  };
  for (const auto& p : robot_positions) {
    const auto x0 = clamp_index(std::floor((p.x() - r) / dx), grid.width());
    const auto x1 = clamp_index(std::ceil((p.x() + r) / dx), grid.width());
    const auto y0 = clamp_index(std::floor((p.y() - r) / dy), grid.height());
    const auto y1 = clamp_index(std::ceil((p.y() + r) / dy), grid.height());
    for (auto iy = y0; iy <= y1; ++iy) {
      for (auto ix = x0; ix <= x1; ++ix) {
        const auto idx = grid.index(ix, iy);
        if ((grid.cell_center(idx) - p).norm() <= r) ++covering[idx];
      }
    }
  }

  auto& q = grid.clarity();
  const auto& noise = grid.process_noise();
  const double per_robot = sensor.information_rate();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double info = per_robot * covering[i];
    double next = q[i];
    if (info > 0.0) {
      next = noise[i] > 0.0 ? clarity_closed_form(dt, q[i], std::sqrt(info / noise[i]), noise[i])
                            : clarity_noiseless(dt, q[i], info);
    } else if (noise[i] > 0.0) {
      next = clarity_decay(dt, q[i], noise[i]);
    }
    q[i] = std::clamp(next, 0.0, 1.0);
  }
}

EnvironmentGrid step_environment(const EnvironmentGrid& grid, std::span<const Vec2> robot_positions,
                                 const SensorModel& sensor, double dt) {
  EnvironmentGrid next = grid;
  step_environment_inplace(next, robot_positions, sensor, dt);
  return next;
}

double mean_clarity_deficit(const EnvironmentGrid& grid) {
  double sum = 0.0;
  const auto& q = grid.clarity();
  const auto& target = grid.target();
  for (std::size_t i = 0; i < grid.size(); ++i) sum += std::max(0.0, target[i] - q[i]);
  return sum / static_cast<double>(grid.size());
}

}  // namespace mecl
