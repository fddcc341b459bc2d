#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mecl/geometry.hpp"

namespace mecl {

/// Raised when a clarity target cannot be reached in finite time (q1 >= q_inf).
class UnattainableTarget : public std::domain_error {
 public:
  explicit UnattainableTarget(const std::string& what) : std::domain_error(what) {}
};

/// One sensing contribution: measurement gain C and noise variance R.
struct SensingTerm {
  double gain = 1.0;
  double noise_variance = 0.1;
};

/// Disc footprint sensor: C = c0 inside radius r_s of the robot, 0 outside.
struct SensorModel {
  double footprint_radius = 0.0;
  double gain = 1.0;
  double noise_variance = 0.1;

  /// C^2 / R for one robot whose footprint covers the cell.
  double information_rate() const { return gain * gain / noise_variance; }
  void validate() const;
};

/// Constants of the closed-form clarity solution for a fixed initial clarity.
struct ClarityParams {
  double k = 0.0;
  double q_inf = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
  double process_noise = 0.0;

  /// `information` is the summed C^2/R over the sensing robots.
  static ClarityParams from_information(double information, double process_noise, double q0);
  static ClarityParams from_k(double k, double process_noise, double q0);
};

double clarity_rate(double q, std::span<const SensingTerm> terms, double process_noise);

/// Clarity after `t` seconds of constant sensing, started from q0.
/// Throws std::invalid_argument for Q <= 0 (use decay-free or decay-only forms instead).
double clarity_closed_form(double t, double q0, double k, double process_noise);

/// Time for clarity to grow from q0 to q1. Zero when q1 <= q0.
/// Throws UnattainableTarget when q1 >= q_inf.
double clarity_time_to(double q0, double q1, double k, double process_noise);

/// Q = 0 limit: dq/dt = S (1 - q)^2.
double clarity_noiseless(double t, double q0, double information);
double clarity_noiseless_time_to(double q0, double q1, double information);

/// No sensing: dq/dt = -Q q^2.
double clarity_decay(double t, double q0, double process_noise);

/// Attainable clarity for a given information rate and process noise (1 when Q = 0).
double attainable_clarity(double information, double process_noise);

/// Row-major grid of independent cells over [0, L1] x [0, L2].
class EnvironmentGrid {
 public:
  EnvironmentGrid() = default;
  EnvironmentGrid(std::size_t width_cells, std::size_t height_cells, double length_x, double length_y);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return width_ * height_; }
  double length_x() const { return length_x_; }
  double length_y() const { return length_y_; }
  double cell_dx() const { return length_x_ / static_cast<double>(width_); }
  double cell_dy() const { return length_y_ / static_cast<double>(height_); }
  double cell_area() const { return cell_dx() * cell_dy(); }

  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * width_ + ix; }
  Vec2 cell_center(std::size_t idx) const;

  std::vector<double>& clarity() { return clarity_; }
  const std::vector<double>& clarity() const { return clarity_; }
  std::vector<double>& process_noise() { return process_noise_; }
  const std::vector<double>& process_noise() const { return process_noise_; }
  std::vector<double>& target() { return target_; }
  const std::vector<double>& target() const { return target_; }

  void fill_clarity(double q);
  void fill_process_noise(double q);
  void fill_target(double q);

  /// Throws std::invalid_argument naming the offending cell.
  void validate() const;

  /// Rows of "ix,iy,q,Q,target".
  std::string to_csv() const;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  double length_x_ = 0.0;
  double length_y_ = 0.0;
  std::vector<double> clarity_;
  std::vector<double> process_noise_;
  std::vector<double> target_;
};

/// Advances every cell exactly over dt with the sensing set held constant.
EnvironmentGrid step_environment(const EnvironmentGrid& grid, std::span<const Vec2> robot_positions,
                                 const SensorModel& sensor, double dt);

/// In-place variant used by the simulation loop.
void step_environment_inplace(EnvironmentGrid& grid, std::span<const Vec2> robot_positions,
                              const SensorModel& sensor, double dt);

double mean_clarity_deficit(const EnvironmentGrid& grid);

}  // namespace mecl
