#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mecl/clarity.hpp"

namespace mecl {

/// Normalized per-cell density over the same geometry as an EnvironmentGrid.
struct SpatialDistribution {
  std::size_t width = 0;
  std::size_t height = 0;
  double length_x = 0.0;
  double length_y = 0.0;
  std::vector<double> density;

  static SpatialDistribution uniform(const EnvironmentGrid& grid);
  Vec2 cell_center(std::size_t idx) const;
  double sum() const;
  std::string to_csv() const;
};

inline constexpr double kDefaultTisdEpsilon = 1e-3;

/// Target information spatial distribution: each cell weighted by the time a
/// team of `robot_count` identical sensors needs to lift it to its (clamped)
/// target clarity. All-satisfied grids yield the uniform distribution.
SpatialDistribution gen_tisd(const EnvironmentGrid& grid, const SensorModel& sensor, int robot_count,
                             double epsilon = kDefaultTisdEpsilon);

/// Unnormalized per-cell sensing times (the weights gen_tisd normalizes).
std::vector<double> tisd_weights(const EnvironmentGrid& grid, const SensorModel& sensor, int robot_count,
                                 double epsilon = kDefaultTisdEpsilon);

}  // namespace mecl
