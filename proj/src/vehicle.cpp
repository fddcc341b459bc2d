#include "mecl/vehicle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <stdexcept>

namespace mecl {

namespace {

constexpr double kAsymmetryTolerance = 1e-8;

Mat3 symmetrize(const Mat3& m, int& repairs) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kAsymmetryTolerance) ++repairs;
  return 0.5 * (m + m.transpose());
}

Mat3 psd_sqrt(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  const Vec3 roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

void BatteryModel::validate() const {
  if (!(discharge_rate > 0.0)) throw std::invalid_argument("battery.discharge_rate must be > 0");
  if (!(e_min >= 0.0)) throw std::invalid_argument("battery.e_min must be >= 0");
  if (!(e_min < capacity)) throw std::invalid_argument("battery.e_min must be < battery.capacity");
}

RechargeableState step_rechargeable(const RechargeableState& state, const Vec2& accel, const BatteryModel& battery,
                                    double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  RechargeableState next = state;
  if (!state.airborne) return next;
  double_integrator_step(next.position, next.velocity, accel, dt);
  next.soc -= battery.discharge_rate * dt;
  return next;
}

Vec2 tracking_controller(const RechargeableState& state, const ReferenceState& ref, const TrackingGains& gains) {
  Vec2 u = ref.accel + gains.kp * (ref.position - state.position) + gains.kd * (ref.velocity - state.velocity);
  const double n = u.norm();
  if (n > gains.u_max) u *= gains.u_max / n;
  return u;
}

void NoiseModel::validate() const {
  Eigen::SelfAdjointEigenSolver<Mat3> w(process);
  if (w.eigenvalues().minCoeff() < -1e-12) throw std::invalid_argument("charger process noise W must be PSD");
  Eigen::SelfAdjointEigenSolver<Mat2> v(measurement);
  if (v.eigenvalues().minCoeff() <= 0.0) throw std::invalid_argument("charger measurement noise V must be PD");
}

ChargerPose step_charger(const ChargerPose& pose, const Vec2& command, const Mat3& process_noise, double dt,
                         Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  ChargerPose next = unicycle_step(pose, command, dt);
  if (process_noise.isZero(0.0)) return next;
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3 z(normal(rng), normal(rng), normal(rng));
  const Vec3 w = psd_sqrt(process_noise) * z * std::sqrt(dt);
  next.x += w.x();
  next.y += w.y();
  next.heading = std::remainder(next.heading + w.z(), 2.0 * std::numbers::pi);
  return next;
}

ChargerEstimate ekf_predict(const ChargerEstimate& est, const Vec2& command, double dt, const Mat3& process_noise) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const double v = command.x();
  const double theta = est.mean.z();
  ChargerEstimate out = est;
  const ChargerPose next = unicycle_step({est.mean.x(), est.mean.y(), theta}, command, dt);
  out.mean = Vec3(next.x, next.y, next.heading);
  Mat3 f = Mat3::Identity();
  f(0, 2) = -v * std::sin(theta) * dt;
  f(1, 2) = v * std::cos(theta) * dt;
  out.covariance = symmetrize(f * est.covariance * f.transpose() + process_noise * dt, out.symmetry_repairs);
  return out;
}

ChargerEstimate ekf_update(const ChargerEstimate& est, const Vec2& measurement, const Mat2& measurement_noise) {
  Eigen::Matrix<double, 2, 3> h = Eigen::Matrix<double, 2, 3>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const Mat2 s = h * est.covariance * h.transpose() + measurement_noise;
  Eigen::FullPivLU<Mat2> lu(s);
  if (!lu.isInvertible() || std::abs(s.determinant()) < 1e-300)
    throw std::domain_error("singular innovation covariance");
  const Eigen::Matrix<double, 3, 2> gain = est.covariance * h.transpose() * lu.inverse();
  ChargerEstimate out = est;
  out.mean += gain * (measurement - h * est.mean);
  out.mean.z() = std::remainder(out.mean.z(), 2.0 * std::numbers::pi);
  const Mat3 ikh = Mat3::Identity() - gain * h;
  out.covariance = symmetrize(ikh * est.covariance * ikh.transpose() + gain * measurement_noise * gain.transpose(),
                              out.symmetry_repairs);
  return out;
}

RendezvousPrediction predict_rendezvous(const ChargerEstimate& est, double horizon, double altitude,
                                        const CommandSchedule& command, const Mat3& process_noise, double step) {
  if (!(horizon > 0.0)) throw std::invalid_argument("rendezvous horizon must be > 0");
  if (!(altitude > 0.0)) throw std::invalid_argument("rendezvous altitude must be > 0");
  if (!(step > 0.0)) throw std::invalid_argument("prediction step must be > 0");
  RendezvousPrediction out;
  out.estimate = est;
  const auto steps = static_cast<long>(std::floor(horizon / step + 1e-9));
  double t = 0.0;
  for (long i = 0; i < steps; ++i) {
    out.estimate = ekf_predict(out.estimate, command(t), step, process_noise);
    t += step;
  }
  const double rest = horizon - t;
  if (rest > 1e-12) out.estimate = ekf_predict(out.estimate, command(t), rest, process_noise);
  out.point = Vec3(out.estimate.mean.x(), out.estimate.mean.y(), altitude);
  return out;
}

Vec2 worst_case_charger_point(const ChargerEstimate& est) {
  const Mat2 cov = est.position_covariance();
  const double a = cov(0, 0);
  const double b = 0.5 * (cov(0, 1) + cov(1, 0));
  const double c = cov(1, 1);
  const double lambda = 0.5 * (a + c) + std::hypot(0.5 * (a - c), b);
  if (!(lambda > 0.0)) return est.position();
  Vec2 dir;
  if (std::abs(b) > 1e-15 * std::max(1.0, lambda)) {
    dir = Vec2(lambda - c, b).normalized();
  } else {
    dir = a >= c ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
  }
  if (dir.x() < 0.0 || (dir.x() == 0.0 && dir.y() < 0.0)) dir = -dir;
  return est.position() + dir * std::sqrt(kChiSquare2Dof95 * lambda);
}

}  // namespace mecl
