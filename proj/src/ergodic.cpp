#include "mecl/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <stdexcept>

namespace mecl {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

struct Interp {
  std::size_t i;
  double frac;
};

Interp locate(double t, double start, double dt, std::size_t samples) {
  if (samples <= 1) return {0, 0.0};
  const double s = std::clamp((t - start) / dt, 0.0, static_cast<double>(samples - 1));
  auto i = static_cast<std::size_t>(std::floor(s));
  if (i >= samples - 1) return {samples - 1, 0.0};
  return {i, s - static_cast<double>(i)};
}

Vec2 lerp_at(const std::vector<Vec2>& v, const Interp& at) {
  if (at.frac == 0.0) return v[at.i];
  return (1.0 - at.frac) * v[at.i] + at.frac * v[at.i + 1];
}

Vec2 project_ball(const Vec2& u, double radius) {
  const double n = u.norm();
  return n > radius ? Vec2(u * (radius / n)) : u;
}

}  // namespace

FourierBasis::FourierBasis(int modes_per_dim, double length_x, double length_y)
    : modes_(modes_per_dim), length_x_(length_x), length_y_(length_y) {
  if (modes_per_dim < 1) throw std::invalid_argument("modes_per_dim must be >= 1");
  if (!(length_x > 0.0) || !(length_y > 0.0)) throw std::invalid_argument("domain lengths must be > 0");
  normalizers_.resize(size());
  weights_.resize(size());
  for (int k1 = 0; k1 < modes_; ++k1) {
    for (int k2 = 0; k2 < modes_; ++k2) {
      const double hx = k1 == 0 ? length_x : length_x / 2.0;
      const double hy = k2 == 0 ? length_y : length_y / 2.0;
      normalizers_[index(k1, k2)] = std::sqrt(hx * hy);
      weights_[index(k1, k2)] = std::pow(1.0 + k1 * k1 + k2 * k2, -1.5);
    }
  }
}

double FourierBasis::evaluate(std::size_t k, const Vec2& p) const {
  const auto k1 = static_cast<int>(k) / modes_;
  const auto k2 = static_cast<int>(k) % modes_;
  return std::cos(k1 * kPi * p.x() / length_x_) * std::cos(k2 * kPi * p.y() / length_y_) / normalizers_[k];
}

void FourierBasis::evaluate_all(const Vec2& p, std::span<double> out) const {
  thread_local std::vector<double> cx, cy;
  cx.resize(static_cast<std::size_t>(modes_));
  cy.resize(static_cast<std::size_t>(modes_));
  for (int k = 0; k < modes_; ++k) {
    cx[k] = std::cos(k * kPi * p.x() / length_x_);
    cy[k] = std::cos(k * kPi * p.y() / length_y_);
  }
  for (int k1 = 0; k1 < modes_; ++k1)
    for (int k2 = 0; k2 < modes_; ++k2) out[index(k1, k2)] = cx[k1] * cy[k2] / normalizers_[index(k1, k2)];
}

Vec2 FourierBasis::weighted_gradient(const Vec2& p, std::span<const double> w) const {
  thread_local std::vector<double> cx, cy, sx, sy;
  const auto m = static_cast<std::size_t>(modes_);
  cx.resize(m);
  cy.resize(m);
  sx.resize(m);
  sy.resize(m);
  for (int k = 0; k < modes_; ++k) {
    cx[k] = std::cos(k * kPi * p.x() / length_x_);
    sx[k] = std::sin(k * kPi * p.x() / length_x_);
    cy[k] = std::cos(k * kPi * p.y() / length_y_);
    sy[k] = std::sin(k * kPi * p.y() / length_y_);
  }
  double gx = 0.0, gy = 0.0;
  for (int k1 = 0; k1 < modes_; ++k1) {
    for (int k2 = 0; k2 < modes_; ++k2) {
      const auto k = index(k1, k2);
      const double s = w[k] / normalizers_[k];
      gx -= s * (k1 * kPi / length_x_) * sx[k1] * cy[k2];
      gy -= s * (k2 * kPi / length_y_) * cx[k1] * sy[k2];
    }
  }
  return {gx, gy};
}

Vec2 Trajectory::position_at(double t) const { return lerp_at(position, locate(t, start_time, dt, samples())); }
Vec2 Trajectory::velocity_at(double t) const { return lerp_at(velocity, locate(t, start_time, dt, samples())); }
Vec2 Trajectory::control_at(double t) const {
  if (control.empty() || t < start_time) return Vec2::Zero();
  const auto i = static_cast<std::size_t>(std::floor((t - start_time) / dt + 1e-9));
  return i < control.size() ? control[i] : Vec2::Zero();
}

std::string TrajectoryBundle::to_csv() const {
  std::string out = "t";
  for (std::size_t r = 0; r < robots.size(); ++r) out += fmt::format(",x_{0},y_{0},vx_{0},vy_{0}", r + 1);
  out += '\n';
  const std::size_t samples = robots.empty() ? 0 : robots.front().samples();
  for (std::size_t i = 0; i < samples; ++i) {
    out += fmt::format("{:.4f}", start_time + dt * static_cast<double>(i));
    for (const auto& tr : robots) {
      out += fmt::format(",{:.6f},{:.6f},{:.6f},{:.6f}", tr.position[i].x(), tr.position[i].y(), tr.velocity[i].x(),
                         tr.velocity[i].y());
    }
    out += '\n';
  }
  return out;
}

void PlannerConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(fmt::format("planner.{} must be > 0", name));
  };
  positive(dt, "dt");
  positive(horizon, "horizon");
  positive(step_size, "step_size");
  positive(control_weight, "control_weight");
  positive(collision_weight, "collision_weight");
  positive(d_min, "d_min");
  positive(u_max, "u_max");
  if (iterations < 0) throw std::invalid_argument("planner.iterations must be >= 0");
}

std::vector<double> distribution_coefficients(const SpatialDistribution& phi, const FourierBasis& basis) {
  std::vector<double> coeffs(basis.size(), 0.0);
  std::vector<double> f(basis.size());
  for (std::size_t p = 0; p < phi.density.size(); ++p) {
    if (phi.density[p] == 0.0) continue;
    basis.evaluate_all(phi.cell_center(p), f);
    for (std::size_t k = 0; k < f.size(); ++k) coeffs[k] += phi.density[p] * f[k];
  }
  return coeffs;
}

std::vector<double> trajectory_coefficients(const TrajectoryBundle& bundle, const FourierBasis& basis) {
  if (bundle.robots.empty()) throw std::invalid_argument("bundle has no trajectories");
  std::vector<double> coeffs(basis.size(), 0.0);
  std::vector<double> f(basis.size());
  std::size_t count = 0;
  for (const auto& tr : bundle.robots) {
    for (const auto& p : tr.position) {
      basis.evaluate_all(p, f);
      for (std::size_t k = 0; k < f.size(); ++k) coeffs[k] += f[k];
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("bundle has no samples");
  for (auto& c : coeffs) c /= static_cast<double>(count);
  return coeffs;
}

double ergodic_metric(std::span<const double> traj_coeffs, std::span<const double> dist_coeffs,
                      const FourierBasis& basis) {
  if (traj_coeffs.size() != basis.size() || dist_coeffs.size() != basis.size())
    throw std::invalid_argument("coefficient arrays do not match the basis");
  double phi = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double d = traj_coeffs[k] - dist_coeffs[k];
    phi += basis.weight(k) * d * d;
  }
  return phi;
}

void double_integrator_step(Vec2& position, Vec2& velocity, const Vec2& accel, double dt) {
  position += velocity * dt + 0.5 * accel * dt * dt;
  velocity += accel * dt;
}

Trajectory rollout(const RobotStart& start, std::span<const Vec2> controls, double start_time, double dt) {
  Trajectory tr;
  tr.start_time = start_time;
  tr.dt = dt;
  tr.control.assign(controls.begin(), controls.end());
  tr.position.reserve(controls.size() + 1);
  tr.velocity.reserve(controls.size() + 1);
  Vec2 p = start.position;
  Vec2 v = start.velocity;
  tr.position.push_back(p);
  tr.velocity.push_back(v);
  for (const auto& u : controls) {
    double_integrator_step(p, v, u, dt);
    tr.position.push_back(p);
    tr.velocity.push_back(v);
  }
  return tr;
}

namespace {

// Objective and (optionally) its gradient with respect to every control.
class ErgodicObjective {
 public:
  ErgodicObjective(std::span<const RobotStart> starts, std::span<const double> phi_coeffs,
                   const PlannerConfig& cfg, const FourierBasis& basis, std::size_t steps)
      : starts_(starts), phi_(phi_coeffs), cfg_(cfg), basis_(basis), steps_(steps) {}

  double evaluate(const std::vector<Vec2>& controls, std::vector<Vec2>* grad, double* metric_out = nullptr) {
    const std::size_t robots = starts_.size();
    const std::size_t samples = steps_ + 1;
    pos_.assign(robots * samples, Vec2::Zero());
    vel_.assign(robots * samples, Vec2::Zero());
    for (std::size_t r = 0; r < robots; ++r) {
      Vec2 p = starts_[r].position;
      Vec2 v = starts_[r].velocity;
      pos_[r * samples] = p;
      vel_[r * samples] = v;
      for (std::size_t t = 0; t < steps_; ++t) {
        double_integrator_step(p, v, controls[r * steps_ + t], cfg_.dt);
        pos_[r * samples + t + 1] = p;
        vel_[r * samples + t + 1] = v;
      }
    }

    coeffs_.assign(basis_.size(), 0.0);
    f_.resize(basis_.size());
    for (const auto& p : pos_) {
      basis_.evaluate_all(p, f_);
      for (std::size_t k = 0; k < f_.size(); ++k) coeffs_[k] += f_[k];
    }
    const double norm = 1.0 / static_cast<double>(pos_.size());
    for (auto& c : coeffs_) c *= norm;
    const double metric = ergodic_metric(coeffs_, phi_, basis_);
    if (metric_out) *metric_out = metric;

    double effort = 0.0;
    for (const auto& u : controls) effort += u.squaredNorm();
    double total = metric + cfg_.control_weight * cfg_.dt * effort;

    const bool want_grad = grad != nullptr;
    if (want_grad) {
      gp_.assign(pos_.size(), Vec2::Zero());
      gv_.assign(vel_.size(), Vec2::Zero());
      w_.resize(basis_.size());
      for (std::size_t k = 0; k < basis_.size(); ++k) w_[k] = 2.0 * basis_.weight(k) * (coeffs_[k] - phi_[k]) * norm;
      for (std::size_t i = 0; i < pos_.size(); ++i) gp_[i] = basis_.weighted_gradient(pos_[i], w_);
    }

    const double lx = basis_.length_x();
    const double ly = basis_.length_y();
    for (std::size_t i = 0; i < pos_.size(); ++i) {
      const Vec2& p = pos_[i];
      const Vec2 lo(std::min(0.0, p.x()), std::min(0.0, p.y()));
      const Vec2 hi(std::max(0.0, p.x() - lx), std::max(0.0, p.y() - ly));
      total += cfg_.boundary_weight * cfg_.dt * (lo.squaredNorm() + hi.squaredNorm());
      if (want_grad) gp_[i] += 2.0 * cfg_.boundary_weight * cfg_.dt * (lo + hi);

      const double speed = vel_[i].norm();
      if (speed > cfg_.speed_limit) {
        const double excess = speed - cfg_.speed_limit;
        total += cfg_.speed_weight * cfg_.dt * excess * excess;
        if (want_grad) gv_[i] += 2.0 * cfg_.speed_weight * cfg_.dt * excess * vel_[i] / speed;
      }
    }

    for (std::size_t a = 0; a < robots; ++a) {
      for (std::size_t b = a + 1; b < robots; ++b) {
        for (std::size_t t = 0; t < samples; ++t) {
          const Vec2 diff = pos_[a * samples + t] - pos_[b * samples + t];
          const double d = diff.norm();
          if (d >= cfg_.d_min) continue;
          const double gap = cfg_.d_min - d;
          total += cfg_.collision_weight * cfg_.dt * gap * gap;
          if (want_grad && d > 1e-12) {
            const Vec2 g = -2.0 * cfg_.collision_weight * cfg_.dt * gap * diff / d;
            gp_[a * samples + t] += g;
            gp_[b * samples + t] -= g;
          }
        }
      }
    }

    if (want_grad) {
      grad->assign(controls.size(), Vec2::Zero());
      const double dt = cfg_.dt;
      for (std::size_t r = 0; r < robots; ++r) {
        Vec2 lp = gp_[r * samples + steps_];
        Vec2 lv = gv_[r * samples + steps_];
        for (std::size_t t = steps_; t-- > 0;) {
          (*grad)[r * steps_ + t] =
              0.5 * dt * dt * lp + dt * lv + 2.0 * cfg_.control_weight * dt * controls[r * steps_ + t];
          lv = gv_[r * samples + t] + dt * lp + lv;
          lp = gp_[r * samples + t] + lp;
        }
      }
    }
    return total;
  }

 private:
  std::span<const RobotStart> starts_;
  std::span<const double> phi_;
  const PlannerConfig& cfg_;
  const FourierBasis& basis_;
  std::size_t steps_;
  std::vector<Vec2> pos_, vel_, gp_, gv_;
  std::vector<double> coeffs_, f_, w_;
};

std::size_t horizon_steps(const PlannerConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
}

}  // namespace

double planner_objective(const TrajectoryBundle& bundle, std::span<const double> phi_coeffs,
                         const PlannerConfig& cfg, const FourierBasis& basis) {
  std::vector<RobotStart> starts;
  std::vector<Vec2> controls;
  const std::size_t steps = bundle.robots.empty() ? 0 : bundle.robots.front().control.size();
  for (const auto& tr : bundle.robots) {
    starts.push_back({tr.position.front(), tr.velocity.front()});
    controls.insert(controls.end(), tr.control.begin(), tr.control.end());
  }
  PlannerConfig local = cfg;
  local.dt = bundle.dt;
  ErgodicObjective objective(starts, phi_coeffs, local, basis, steps);
  return objective.evaluate(controls, nullptr);
}

PlanResult plan_ergodic(std::span<const RobotStart> starts, const SpatialDistribution& phi,
                        const PlannerConfig& cfg, const FourierBasis& basis, double start_time) {
  cfg.validate();
  if (starts.empty()) throw std::invalid_argument("at least one robot start is required");
  const std::size_t steps = horizon_steps(cfg);
  const auto phi_coeffs = distribution_coefficients(phi, basis);
  ErgodicObjective objective(starts, phi_coeffs, cfg, basis, steps);

  std::vector<Vec2> controls(starts.size() * steps, Vec2::Zero());
  std::vector<Vec2> grad, trial(controls.size());
  PlanResult result;
  double current = objective.evaluate(controls, &grad);
  result.objective_history.push_back(current);

  double step = cfg.step_size;
  const double max_step = 4.0 * cfg.u_max;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    double gmax = 0.0;
    for (const auto& g : grad) gmax = std::max(gmax, g.cwiseAbs().maxCoeff());
    if (!(gmax > 1e-15)) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      for (std::size_t i = 0; i < controls.size(); ++i)
        trial[i] = project_ball(controls[i] - (step / gmax) * grad[i], cfg.u_max);
      const double value = objective.evaluate(trial, nullptr);
      if (value < current) {
        controls.swap(trial);
        current = objective.evaluate(controls, &grad);
        accepted = true;
        step = std::min(step * 2.0, max_step);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    result.objective_history.push_back(current);
  }

  result.objective = objective.evaluate(controls, nullptr, &result.metric);
  result.bundle.start_time = start_time;
  result.bundle.dt = cfg.dt;
  result.bundle.horizon = cfg.dt * static_cast<double>(steps);
  for (std::size_t r = 0; r < starts.size(); ++r) {
    std::span<const Vec2> u(controls.data() + r * steps, steps);
    result.bundle.robots.push_back(rollout(starts[r], u, start_time, cfg.dt));
  }
  return result;
}

ChargerPose ChargerTrajectory::pose_at(double t) const {
  if (pose.empty()) return {};
  const auto at = locate(t, start_time, dt, pose.size());
  if (at.frac == 0.0) return pose[at.i];
  const auto& a = pose[at.i];
  const auto& b = pose[at.i + 1];
  return {a.x + at.frac * (b.x - a.x), a.y + at.frac * (b.y - a.y),
          a.heading + at.frac * wrap_angle(b.heading - a.heading)};
}

Vec2 ChargerTrajectory::control_at(double t) const {
  if (control.empty() || t < start_time) return Vec2::Zero();
  const auto i = static_cast<std::size_t>(std::floor((t - start_time) / dt + 1e-9));
  return i < control.size() ? control[i] : Vec2::Zero();
}

Vec2 pursuit_command(const ChargerPose& pose, const Vec2& target, const PursuitGains& gains) {
  const Vec2 err = target - pose.position();
  const double dist = err.norm();
  if (dist < gains.stop_radius) return Vec2::Zero();
  const double heading_err = wrap_angle(std::atan2(err.y(), err.x()) - pose.heading);
  const double v = std::min(gains.max_speed, gains.speed_gain * dist) * std::max(0.0, std::cos(heading_err));
  const double w = std::clamp(gains.turn_gain * heading_err, -gains.max_turn_rate, gains.max_turn_rate);
  return {v, w};
}

ChargerPose unicycle_step(const ChargerPose& pose, const Vec2& command, double dt) {
  return {pose.x + command.x() * std::cos(pose.heading) * dt, pose.y + command.x() * std::sin(pose.heading) * dt,
          wrap_angle(pose.heading + command.y() * dt)};
}

ChargerTrajectory plan_charger_nominal(const TrajectoryBundle& bundle, const ChargerPose& start,
                                       const PursuitGains& gains) {
  if (bundle.robots.empty()) throw std::invalid_argument("bundle has no trajectories");
  return plan_charger_nominal(bundle, start, gains, bundle.start_time, bundle.robots.front().duration());
}

ChargerTrajectory plan_charger_nominal(const TrajectoryBundle& bundle, const ChargerPose& start,
                                       const PursuitGains& gains, double start_time, double duration) {
  if (bundle.robots.empty()) throw std::invalid_argument("bundle has no trajectories");
  if (!(duration >= 0.0)) throw std::invalid_argument("charger plan duration must be >= 0");
  ChargerTrajectory out;
  out.start_time = start_time;
  out.dt = bundle.dt;
  const auto steps = static_cast<std::size_t>(std::lround(duration / bundle.dt));
  out.pose.reserve(steps + 1);
  out.pose.push_back(start);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = start_time + bundle.dt * static_cast<double>(i + 1);
    Vec2 centroid = Vec2::Zero();
    for (const auto& tr : bundle.robots) centroid += tr.position_at(t);
    centroid /= static_cast<double>(bundle.robots.size());
    const Vec2 cmd = pursuit_command(out.pose.back(), centroid, gains);
    out.control.push_back(cmd);
    out.pose.push_back(unicycle_step(out.pose.back(), cmd, bundle.dt));
  }
  return out;
}

}  // namespace mecl
