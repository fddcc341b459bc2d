#include "mecl/verify.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <random>

#include "mecl/clarity.hpp"
#include "mecl/scheduler.hpp"
#include "mecl/vehicle.hpp"

namespace mecl {

namespace {

double rk4_clarity(double q0, double information, double noise, double t_end, double h) {
  const auto f = [&](double q) { return (1.0 - q) * (1.0 - q) * information - noise * q * q; };
  double q = q0;
  const auto steps = static_cast<long>(std::ceil(t_end / h));
  h = t_end / static_cast<double>(steps);
  for (long i = 0; i < steps; ++i) {
    const double k1 = f(q);
    const double k2 = f(q + 0.5 * h * k1);
    const double k3 = f(q + 0.5 * h * k2);
    const double k4 = f(q + h * k3);
    q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return q;
}

int sequential_return_capacity(double min_flight, double t_r, double t_e, double gap) {
  int n = 0;
  while (t_r + static_cast<double>(n) * gap + t_e <= min_flight) ++n;
  return n;
}

Vec2 sampled_boundary_max(const Vec2& mean, const Mat2& cov, int samples) {
  const Mat2 l = cov.llt().matrixL();
  const double r = std::sqrt(kChiSquare2Dof95);
  const auto point = [&](double a) -> Vec2 { return l * Vec2(std::cos(a), std::sin(a)) * r; };
  double best_a = 0.0;
  double best = -1.0;
  for (int i = 0; i < samples; ++i) {
    const double a = 2.0 * std::numbers::pi * i / samples;
    const double d = point(a).squaredNorm();
    if (d > best) {
      best = d;
      best_a = a;
    }
  }
  double lo = best_a - 2.0 * std::numbers::pi / samples;
  double hi = best_a + 2.0 * std::numbers::pi / samples;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (point(a).squaredNorm() > point(b).squaredNorm()) {
      hi = b;
    } else {
      lo = a;
    }
  }
  Vec2 p = point(0.5 * (lo + hi));
  if (p.x() < 0.0 || (p.x() == 0.0 && p.y() < 0.0)) p = -p;
  return mean + p;
}

}  // namespace

VerifyReport run_verification(std::uint64_t seed, int samples) {
  VerifyReport report;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto line = [&](const char* name, bool pass, const std::string& detail) {
    report.ok = report.ok && pass;
    report.text += fmt::format("{:<28} {} {}\n", name, pass ? "PASS" : "FAIL", detail);
  };

  double forward_err = 0.0;
  double inverse_err = 0.0;
  bool unattainable_raised = true;
  for (int i = 0; i < samples; ++i) {
    const double q0 = 0.9 * unit(rng);
    const double information = 0.1 + 9.9 * unit(rng);
    const double noise = 0.01 + 0.99 * unit(rng);
    const double k = std::sqrt(information / noise);
    const double t = 0.5 + 19.5 * unit(rng);
    forward_err = std::max(forward_err, std::abs(clarity_closed_form(t, q0, k, noise) -
                                                 rk4_clarity(q0, information, noise, t, 1e-3)));
    const double q_inf = k / (k + 1.0);
    const double q1 = q0 + (q_inf - q0) * (0.05 + 0.9 * unit(rng));
    if (q1 > q0) {
      const double back = clarity_closed_form(clarity_time_to(q0, q1, k, noise), q0, k, noise);
      inverse_err = std::max(inverse_err, std::abs(back - q1));
    }
    try {
      clarity_time_to(std::min(q0, 0.5 * q_inf), q_inf, k, noise);
      unattainable_raised = false;
    } catch (const UnattainableTarget&) {
    }
  }
  line("clarity_closed_form", forward_err < 1e-6, fmt::format("max_abs_err={:.3e}", forward_err));
  line("clarity_time_to", inverse_err < 1e-6 && unattainable_raised, fmt::format("max_abs_err={:.3e}", inverse_err));

  int mismatches = 0;
  for (int i = 0; i < 8 * samples; ++i) {
    SchedulerConfig cfg;
    cfg.rendezvous_horizon = 5.0 + 25.0 * unit(rng);
    cfg.decision_interval = 0.5 + 2.5 * unit(rng);
    cfg.buffer_time = 1.0 + 29.0 * unit(rng);
    cfg.charge_time = 0.0;
    const double min_flight = 300.0 * unit(rng);
    if (max_supported_robots(min_flight, cfg) !=
        sequential_return_capacity(min_flight, cfg.rendezvous_horizon, cfg.decision_interval, cfg.gap()))
      ++mismatches;
  }
  line("max_supported_robots", mismatches == 0, fmt::format("mismatches={}", mismatches));

  double point_err = 0.0;
  double radius_err = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double a = 0.01 + unit(rng);
    const double c = 0.01 + unit(rng);
    const double b = (2.0 * unit(rng) - 1.0) * 0.9 * std::sqrt(a * c);
    ChargerEstimate est;
    est.mean = Vec3(10.0 * unit(rng), 10.0 * unit(rng), 0.0);
    est.covariance = Mat3::Identity();
    est.covariance.topLeftCorner<2, 2>() << a, b, b, c;
    const Vec2 p = worst_case_charger_point(est);
    const Vec2 oracle = sampled_boundary_max(est.position(), est.position_covariance(), 10000);
    point_err = std::max(point_err, (p - oracle).norm());
    const Vec2 d = p - est.position();
    radius_err = std::max(radius_err, std::abs(d.dot(est.position_covariance().inverse() * d) - kChiSquare2Dof95));
  }
  line("worst_case_charger_point", point_err < 1e-6 && radius_err < 1e-6,
       fmt::format("max_point_err={:.3e} max_radius_err={:.3e}", point_err, radius_err));
  report.text += fmt::format("seed={} overall={}\n", seed, report.ok ? "PASS" : "FAIL");
  return report;
}

}  // namespace mecl
