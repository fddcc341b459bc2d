#include "mecl/tisd.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace mecl {

SpatialDistribution SpatialDistribution::uniform(const EnvironmentGrid& grid) {
  SpatialDistribution d{grid.width(), grid.height(), grid.length_x(), grid.length_y(), {}};
  d.density.assign(grid.size(), 1.0 / static_cast<double>(grid.size()));
  return d;
}

Vec2 SpatialDistribution::cell_center(std::size_t idx) const {
  const double dx = length_x / static_cast<double>(width);
  const double dy = length_y / static_cast<double>(height);
  return {(static_cast<double>(idx % width) + 0.5) * dx, (static_cast<double>(idx / width) + 0.5) * dy};
}

double SpatialDistribution::sum() const { return std::accumulate(density.begin(), density.end(), 0.0); }

std::string SpatialDistribution::to_csv() const {
  std::string out = "ix,iy,phi\n";
  for (std::size_t i = 0; i < density.size(); ++i)
    out += fmt::format("{},{},{:.12g}\n", i % width, i / width, density[i]);
  return out;
}

std::vector<double> tisd_weights(const EnvironmentGrid& grid, const SensorModel& sensor, int robot_count,
                                 double epsilon) {
  if (robot_count < 1) throw std::invalid_argument("robot_count must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  const double info = sensor.information_rate() * robot_count;
  std::vector<double> weights(grid.size(), 0.0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double q = grid.clarity()[p];
    const double noise = grid.process_noise()[p];
    if (noise > 0.0) {
      const double k = std::sqrt(info / noise);
      const double q_inf = k / (k + 1.0);
      if (!(epsilon < q_inf)) throw std::invalid_argument("epsilon must be below the attainable clarity");
      const double target = std::min(grid.target()[p], q_inf - epsilon);
      weights[p] = clarity_time_to(q, target, k, noise);
    } else {
      const double target = std::min(grid.target()[p], 1.0 - epsilon);
      weights[p] = clarity_noiseless_time_to(q, target, info);
    }
  }
  return weights;
}

SpatialDistribution gen_tisd(const EnvironmentGrid& grid, const SensorModel& sensor, int robot_count,
                             double epsilon) {
  auto weights = tisd_weights(grid, sensor, robot_count, epsilon);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) return SpatialDistribution::uniform(grid);
  SpatialDistribution d{grid.width(), grid.height(), grid.length_x(), grid.length_y(), std::move(weights)};
  for (auto& w : d.density) w /= total;
  return d;
}

}  // namespace mecl
