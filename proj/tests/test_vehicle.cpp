#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mecl/vehicle.hpp"

using namespace mecl;

namespace {

Mat3 random_spd(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g;
  Mat3 a;
  for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = g(rng);
  return scale * (a * a.transpose() + 0.1 * Mat3::Identity());
}

bool symmetric_psd(const Mat3& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  return es.eigenvalues().minCoeff() >= -1e-10;
}

// Max of the Mahalanobis-5.991 ellipse boundary distance from the mean, sampled densely.
Vec2 sampled_farthest_point(const Vec2& mean, const Mat2& cov, int samples) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(cov);
  Vec2 best = mean;
  double best_d = -1.0;
  for (int i = 0; i < samples; ++i) {
    const double a = 2.0 * std::numbers::pi * i / samples;
    Vec2 z(std::cos(a), std::sin(a));
    const Vec2 p = mean + es.eigenvectors() * (es.eigenvalues().cwiseSqrt().cwiseProduct(z)) * std::sqrt(kChiSquare2Dof95);
    if ((p - mean).norm() > best_d) {
      best_d = (p - mean).norm();
      best = p;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("vehicle") {
  TEST_CASE("rechargeable stepping") {
    BatteryModel battery{0.667, 100.0, 0.0};
    RechargeableState s;
    s.position = Vec2(1.0, 2.0);
    s.soc = 50.0;
    auto n = step_rechargeable(s, Vec2::Zero(), battery, 1.0);
    CHECK(n.position == s.position);
    CHECK(n.soc == doctest::Approx(50.0 - 0.667));
    CHECK(s.soc - step_rechargeable(s, Vec2::Zero(), battery, 30.0).soc == doctest::Approx(20.01));

    s.velocity = Vec2(0.3, -0.1);
    const Vec2 u(0.2, 0.5);
    n = step_rechargeable(s, u, battery, 0.7);
    CHECK((n.position - (s.position + s.velocity * 0.7 + 0.5 * u * 0.49)).norm() < 1e-14);
    CHECK((n.velocity - (s.velocity + u * 0.7)).norm() < 1e-14);

    s.airborne = false;
    n = step_rechargeable(s, u, battery, 5.0);
    CHECK(n.soc == s.soc);
    CHECK(n.position == s.position);
    CHECK_THROWS(step_rechargeable(s, u, battery, 0.0));
  }

  TEST_CASE("soc never increases in flight") {
    BatteryModel battery{0.667, 100.0, 0.0};
    RechargeableState s;
    s.soc = 10.0;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int i = 0; i < 200; ++i) {
      const auto n = step_rechargeable(s, Vec2(g(rng), g(rng)), battery, 0.05);
      CHECK(n.soc < s.soc);
      s = n;
    }
  }

  TEST_CASE("tracking controller") {
    TrackingGains gains;
    RechargeableState s;
    s.position = Vec2(1.0, 1.0);
    ReferenceState ref{s.position, s.velocity, Vec2::Zero()};
    CHECK(tracking_controller(s, ref, gains).norm() == 0.0);
    ref.position += Vec2(0.1, -0.2);
    CHECK((tracking_controller(s, ref, gains) - gains.kp * Vec2(0.1, -0.2)).norm() < 1e-14);
    ref.position = Vec2(50.0, 0.0);
    CHECK(tracking_controller(s, ref, gains).norm() == doctest::Approx(gains.u_max));

    // step reference converges
    BatteryModel battery{0.667, 100.0, 0.0};
    s = RechargeableState{};
    s.soc = 100.0;
    const ReferenceState target{Vec2(0.5, -0.3), Vec2::Zero(), Vec2::Zero()};
    const double dt = 0.01;
    for (int i = 0; i < 300; ++i) s = step_rechargeable(s, tracking_controller(s, target, gains), battery, dt);
    CHECK((s.position - target.position).norm() < 0.05);
  }

  TEST_CASE("charger stepping") {
    Rng rng(7);
    const Mat3 zero = Mat3::Zero();
    auto p = step_charger({0.0, 0.0, 0.0}, Vec2(1.0, 0.0), zero, 1.0, rng);
    CHECK(p.x == 1.0);
    CHECK(p.y == 0.0);
    p = step_charger({2.0, 3.0, 0.4}, Vec2::Zero(), zero, 1.0, rng);
    CHECK(p.x == 2.0);
    CHECK(p.y == 3.0);
    CHECK(p.heading == 0.4);

    // Monte-Carlo mean of noisy steps
    Mat3 w = Mat3::Zero();
    w.diagonal() << 0.04, 0.09, 0.01;
    const double dt = 0.5;
    const int n = 100000;
    const ChargerPose start{1.0, 1.0, 0.2};
    const auto clean = unicycle_step(start, Vec2(0.4, 0.1), dt);
    double sx = 0.0, sy = 0.0, sh = 0.0;
    Rng mc(11);
    for (int i = 0; i < n; ++i) {
      const auto q = step_charger(start, Vec2(0.4, 0.1), w, dt, mc);
      sx += q.x - clean.x;
      sy += q.y - clean.y;
      sh += q.heading - clean.heading;
    }
    CHECK(std::abs(sx / n) < 3.0 * std::sqrt(0.04 * dt / n));
    CHECK(std::abs(sy / n) < 3.0 * std::sqrt(0.09 * dt / n));
    CHECK(std::abs(sh / n) < 3.0 * std::sqrt(0.01 * dt / n));

    Rng r1(3), r2(3);
    const auto a = step_charger(start, Vec2(0.4, 0.1), w, dt, r1);
    const auto b = step_charger(start, Vec2(0.4, 0.1), w, dt, r2);
    CHECK(a.x == b.x);
    CHECK(a.heading == b.heading);
  }

  TEST_CASE("ekf predict") {
    std::mt19937_64 rng(5);
    ChargerEstimate est;
    est.mean = Vec3(1.0, 2.0, 0.3);
    est.covariance = random_spd(rng, 0.01);

    const auto same = ekf_predict(est, Vec2::Zero(), 0.5, Mat3::Zero());
    CHECK(same.mean == est.mean);
    CHECK((same.covariance - est.covariance).cwiseAbs().maxCoeff() < 1e-15);

    const double v = 0.7, dt = 0.2;
    const auto moved = ekf_predict(est, Vec2(v, 0.0), dt, Mat3::Zero());
    Mat3 f = Mat3::Identity();
    f(0, 2) = -v * std::sin(0.3) * dt;
    f(1, 2) = v * std::cos(0.3) * dt;
    CHECK((moved.covariance - f * est.covariance * f.transpose()).cwiseAbs().maxCoeff() < 1e-15);

    const Mat3 w = Mat3::Identity() * 1e-3;
    const double small = 1e-3;
    auto twice = ekf_predict(ekf_predict(est, Vec2(v, 0.2), small / 2, w), Vec2(v, 0.2), small / 2, w);
    const auto once = ekf_predict(est, Vec2(v, 0.2), small, w);
    CHECK((twice.mean - once.mean).norm() < 1e-6);
    CHECK((twice.covariance - once.covariance).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("ekf update") {
    std::mt19937_64 rng(8);
    ChargerEstimate est;
    est.mean = Vec3(1.0, 2.0, 0.3);
    est.covariance = random_spd(rng, 0.05);
    const Vec2 y(1.3, 1.8);

    const auto vague = ekf_update(est, y, Mat2::Identity() * 1e12);
    CHECK((vague.mean - est.mean).norm() < 1e-6);
    CHECK((vague.covariance - est.covariance).cwiseAbs().maxCoeff() < 1e-6);

    const auto sharp = ekf_update(est, y, Mat2::Identity() * 1e-12);
    CHECK((sharp.position() - y).norm() < 1e-6);

    Mat2 V;
    V << 0.02, 0.005, 0.005, 0.03;
    const auto post = ekf_update(est, y, V);
    Eigen::Matrix<double, 2, 3> h = Eigen::Matrix<double, 2, 3>::Zero();
    h(0, 0) = h(1, 1) = 1.0;
    const Mat3 info = est.covariance.inverse() + h.transpose() * V.inverse() * h;
    const Mat3 p_info = info.inverse();
    const Vec3 m_info = p_info * (est.covariance.inverse() * est.mean + h.transpose() * V.inverse() * y);
    CHECK((post.covariance - p_info).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((post.mean - m_info).norm() < 1e-8);

    Eigen::SelfAdjointEigenSolver<Mat3> loewner(est.covariance - post.covariance);
    CHECK(loewner.eigenvalues().minCoeff() >= -1e-12);
    CHECK(post.covariance.trace() <= est.covariance.trace());

    ChargerEstimate degenerate;
    CHECK_THROWS_AS(ekf_update(degenerate, y, Mat2::Zero()), std::domain_error);
  }

  TEST_CASE("covariance stays symmetric psd") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    ChargerEstimate est;
    est.covariance = random_spd(rng, 0.01);
    Mat3 w = Mat3::Zero();
    w.diagonal() << 0.001, 0.001, 0.0005;
    for (int i = 0; i < 2000; ++i) {
      est = ekf_predict(est, Vec2(0.5 + 0.1 * g(rng), 0.3 * g(rng)), 0.05, w);
      if (i % 3 == 0) est = ekf_update(est, est.position() + 0.01 * Vec2(g(rng), g(rng)), Mat2::Identity() * 1e-3);
      REQUIRE(symmetric_psd(est.covariance));
    }
  }

  TEST_CASE("rendezvous prediction") {
    ChargerEstimate est;
    est.mean = Vec3(1.0, 2.0, 0.0);
    const auto still = predict_rendezvous(est, 18.0, 1.0, [](double) { return Vec2::Zero(); }, Mat3::Zero());
    CHECK((still.point - Vec3(1.0, 2.0, 1.0)).norm() < 1e-12);

    const auto straight = predict_rendezvous(est, 18.0, 1.0, [](double) { return Vec2(0.5, 0.0); }, Mat3::Zero());
    CHECK((straight.point - Vec3(10.0, 2.0, 1.0)).norm() < 1e-9);

    const double v = 0.5, w = 0.2, T = 18.0, th = 0.4;
    est.mean = Vec3(1.0, 2.0, th);
    const auto curved = predict_rendezvous(est, T, 1.0, [&](double) { return Vec2(v, w); }, Mat3::Zero(), 1e-5);
    const Vec2 arc(1.0 + v / w * (std::sin(th + w * T) - std::sin(th)), 2.0 - v / w * (std::cos(th + w * T) - std::cos(th)));
    CHECK((curved.point.head<2>() - arc).norm() < 1e-4);
    CHECK(curved.point.z() == 1.0);

    CHECK_THROWS(predict_rendezvous(est, 0.0, 1.0, [](double) { return Vec2::Zero(); }, Mat3::Zero()));
  }

  TEST_CASE("worst-case charger point") {
    ChargerEstimate est;
    est.mean = Vec3(3.0, 4.0, 0.0);
    CHECK(worst_case_charger_point(est) == Vec2(3.0, 4.0));

    est.covariance = Mat3::Identity() * 0.04;
    const Vec2 iso = worst_case_charger_point(est);
    CHECK((iso - est.position()).norm() == doctest::Approx(0.2 * std::sqrt(5.991)));
    CHECK((iso - est.position()).normalized().x() == doctest::Approx(1.0));

    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 25; ++trial) {
      est.covariance = random_spd(rng, 0.02);
      const Mat2 cov = est.position_covariance();
      const Vec2 p = worst_case_charger_point(est);
      const Vec2 sampled = sampled_farthest_point(est.position(), cov, 10000);
      // the boundary max is attained at both ends of the major axis; compare distances and the axis
      CHECK(std::abs((p - est.position()).norm() - (sampled - est.position()).norm()) < 1e-6);
      CHECK(std::abs(std::abs((p - est.position()).normalized().dot((sampled - est.position()).normalized())) - 1.0) < 1e-6);
      const Vec2 d = p - est.position();
      CHECK(std::abs(d.dot(cov.inverse() * d) - 5.991) < 1e-6);
    }
  }
}
