#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mecl/geometry.hpp"
#include "mecl/tisd.hpp"

namespace mecl {

/// Cosine basis f_k(x) = cos(k1 pi x / L1) cos(k2 pi y / L2) / h_k, orthonormal on the domain.
class FourierBasis {
 public:
  FourierBasis(int modes_per_dim, double length_x, double length_y);

  int modes_per_dim() const { return modes_; }
  std::size_t size() const { return static_cast<std::size_t>(modes_ * modes_); }
  double length_x() const { return length_x_; }
  double length_y() const { return length_y_; }
  std::size_t index(int k1, int k2) const { return static_cast<std::size_t>(k1 * modes_ + k2); }

  double normalizer(std::size_t k) const { return normalizers_[k]; }
  /// Sobolev weight (1 + |k|^2)^(-3/2).
  double weight(std::size_t k) const { return weights_[k]; }

  double evaluate(std::size_t k, const Vec2& p) const;
  /// Writes f_k(p) for every mode into `out` (size() entries).
  void evaluate_all(const Vec2& p, std::span<double> out) const;
  /// Sum_k w_k grad f_k(p), the contraction the planner gradient needs.
  Vec2 weighted_gradient(const Vec2& p, std::span<const double> w) const;

 private:
  int modes_;
  double length_x_;
  double length_y_;
  std::vector<double> normalizers_;
  std::vector<double> weights_;
};

/// Uniformly sampled double-integrator trajectory. States have one more sample
/// than controls; sample i is at start_time + i * dt.
struct Trajectory {
  double start_time = 0.0;
  double dt = 0.1;
  std::vector<Vec2> position;
  std::vector<Vec2> velocity;
  std::vector<Vec2> control;

  std::size_t samples() const { return position.size(); }
  double duration() const { return position.empty() ? 0.0 : dt * static_cast<double>(position.size() - 1); }
  double end_time() const { return start_time + duration(); }

  /// Linear interpolation, clamped to the first and last sample.
  Vec2 position_at(double t) const;
  Vec2 velocity_at(double t) const;
  /// Control active at time t (zero-order hold), zero outside the horizon.
  Vec2 control_at(double t) const;
};

struct TrajectoryBundle {
  double start_time = 0.0;
  double dt = 0.1;
  double horizon = 0.0;
  std::vector<Trajectory> robots;

  /// CSV columns: t, then x_i,y_i,vx_i,vy_i for each robot.
  std::string to_csv() const;
};

struct PlannerConfig {
  double dt = 0.1;
  double horizon = 30.0;
  int iterations = 100;
  double step_size = 0.5;
  double control_weight = 1e-4;
  double collision_weight = 10.0;
  double boundary_weight = 100.0;
  double speed_weight = 1.0;
  double speed_limit = 1.0;
  double d_min = 0.5;
  double u_max = 1.0;

  void validate() const;
};

struct RobotStart {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

struct PlanResult {
  TrajectoryBundle bundle;
  std::vector<double> objective_history;
  double metric = 0.0;
  double objective = 0.0;
};

std::vector<double> distribution_coefficients(const SpatialDistribution& phi, const FourierBasis& basis);
std::vector<double> trajectory_coefficients(const TrajectoryBundle& bundle, const FourierBasis& basis);
double ergodic_metric(std::span<const double> traj_coeffs, std::span<const double> dist_coeffs,
                      const FourierBasis& basis);

/// Exact zero-order-hold double-integrator step.
void double_integrator_step(Vec2& position, Vec2& velocity, const Vec2& accel, double dt);

/// Rolls a control sequence forward from a start state.
Trajectory rollout(const RobotStart& start, std::span<const Vec2> controls, double start_time, double dt);

/// Projected gradient descent with backtracking on the joint control sequence.
PlanResult plan_ergodic(std::span<const RobotStart> starts, const SpatialDistribution& phi,
                        const PlannerConfig& cfg, const FourierBasis& basis, double start_time = 0.0);

/// Objective of a given bundle, same terms the planner minimizes.
double planner_objective(const TrajectoryBundle& bundle, std::span<const double> phi_coeffs,
                         const PlannerConfig& cfg, const FourierBasis& basis);

struct ChargerPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  Vec2 position() const { return {x, y}; }
};

struct ChargerTrajectory {
  double start_time = 0.0;
  double dt = 0.1;
  std::vector<ChargerPose> pose;
  /// (v, omega) per interval.
  std::vector<Vec2> control;

  ChargerPose pose_at(double t) const;
  Vec2 control_at(double t) const;
  double end_time() const { return start_time + dt * static_cast<double>(pose.empty() ? 0 : pose.size() - 1); }
};

struct PursuitGains {
  double speed_gain = 1.0;
  double turn_gain = 2.0;
  double max_speed = 0.5;
  double max_turn_rate = 1.0;
  double stop_radius = 0.05;
};

/// Pure-pursuit unicycle command toward `target`.
Vec2 pursuit_command(const ChargerPose& pose, const Vec2& target, const PursuitGains& gains);

/// Noise-free unicycle Euler step.
ChargerPose unicycle_step(const ChargerPose& pose, const Vec2& command, double dt);

/// Charger reference that tracks the centroid of the team's planned trajectories.
ChargerTrajectory plan_charger_nominal(const TrajectoryBundle& bundle, const ChargerPose& start,
                                       const PursuitGains& gains);
/// Same, over [start_time, start_time + duration]; targets past the bundle end hold its last centroid.
ChargerTrajectory plan_charger_nominal(const TrajectoryBundle& bundle, const ChargerPose& start,
                                       const PursuitGains& gains, double start_time, double duration);

}  // namespace mecl
