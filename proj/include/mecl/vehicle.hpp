#pragma once

#include <functional>
#include <random>

#include "mecl/ergodic.hpp"
#include "mecl/geometry.hpp"

namespace mecl {

/// Worst-case constant-rate battery.
struct BatteryModel {
  double discharge_rate = 0.667;
  double capacity = 100.0;
  double e_min = 0.0;

  void validate() const;
};

/// Double-integrator robot plus altitude bookkeeping and state of charge.
struct RechargeableState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double altitude = 0.0;
  double soc = 0.0;
  bool airborne = true;
};

RechargeableState step_rechargeable(const RechargeableState& state, const Vec2& accel, const BatteryModel& battery,
                                    double dt);

struct ReferenceState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 accel = Vec2::Zero();  // feed-forward term, zero for pure PD
};

struct TrackingGains {
  double kp = 4.0;
  double kd = 4.0;
  double u_max = 2.0;
};

/// u = a_ref + Kp (p_ref - p) + Kd (v_ref - v), saturated in norm at u_max.
Vec2 tracking_controller(const RechargeableState& state, const ReferenceState& ref, const TrackingGains& gains);

struct NoiseModel {
  Mat3 process = Mat3::Zero();      // W, covariance per second
  Mat2 measurement = Mat2::Identity() * 1e-3;  // V

  void validate() const;
};

using Rng = std::mt19937_64;

/// Unicycle step with additive Gaussian process noise N(0, W dt).
ChargerPose step_charger(const ChargerPose& pose, const Vec2& command, const Mat3& process_noise, double dt, Rng& rng);

struct ChargerEstimate {
  Vec3 mean = Vec3::Zero();  // x, y, heading
  Mat3 covariance = Mat3::Zero();
  int symmetry_repairs = 0;

  Vec2 position() const { return mean.head<2>(); }
  Mat2 position_covariance() const { return covariance.topLeftCorner<2, 2>(); }
};

ChargerEstimate ekf_predict(const ChargerEstimate& est, const Vec2& command, double dt, const Mat3& process_noise);

/// Kalman update with a direct position measurement.
/// Throws std::domain_error when the innovation covariance is singular.
ChargerEstimate ekf_update(const ChargerEstimate& est, const Vec2& measurement, const Mat2& measurement_noise);

struct RendezvousPrediction {
  Vec3 point = Vec3::Zero();  // predicted charger position with altitude d
  ChargerEstimate estimate;   // estimate propagated to the rendezvous time
};

/// Assumed charger command as a function of time since the prediction start.
using CommandSchedule = std::function<Vec2(double)>;

RendezvousPrediction predict_rendezvous(const ChargerEstimate& est, double horizon, double altitude,
                                        const CommandSchedule& command, const Mat3& process_noise,
                                        double step = 0.05);

inline constexpr double kChiSquare2Dof95 = 5.991;

/// Farthest point of the 95% position ellipse along its major axis.
/// Ties between equal eigenvalues resolve to +x; eigenvector sign is chosen
/// with a non-negative x component (non-negative y when x is zero).
Vec2 worst_case_charger_point(const ChargerEstimate& est);

}  // namespace mecl
