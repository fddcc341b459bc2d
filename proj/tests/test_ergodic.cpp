#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mecl/ergodic.hpp"
#include "mecl/vehicle.hpp"

using namespace mecl;

namespace {

constexpr double kPi = std::numbers::pi;

SpatialDistribution uniform_phi(std::size_t cells, double length) {
  SpatialDistribution phi;
  phi.width = phi.height = cells;
  phi.length_x = phi.length_y = length;
  phi.density.assign(cells * cells, 1.0 / static_cast<double>(cells * cells));
  return phi;
}

// f_k written out from its definition, independent of FourierBasis::evaluate.
double cosine_mode(int k1, int k2, const Vec2& p, double lx, double ly) {
  const double hx = k1 == 0 ? lx : lx / 2.0;
  const double hy = k2 == 0 ? ly : ly / 2.0;
  return std::cos(k1 * kPi * p.x() / lx) * std::cos(k2 * kPi * p.y() / ly) / std::sqrt(hx * hy);
}

Trajectory stationary(const Vec2& p, std::size_t samples, double dt) {
  Trajectory tr;
  tr.dt = dt;
  tr.position.assign(samples, p);
  tr.velocity.assign(samples, Vec2::Zero());
  tr.control.assign(samples - 1, Vec2::Zero());
  return tr;
}

TrajectoryBundle bundle_of(std::vector<Trajectory> robots) {
  TrajectoryBundle b;
  b.dt = robots.front().dt;
  b.horizon = robots.front().duration();
  b.robots = std::move(robots);
  return b;
}

double resimulation_residual(const Trajectory& tr) {
  Vec2 p = tr.position.front(), v = tr.velocity.front();
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.control.size(); ++i) {
    const Vec2 a = tr.control[i];
    p = p + v * tr.dt + 0.5 * a * tr.dt * tr.dt;
    v = v + a * tr.dt;
    worst = std::max({worst, (p - tr.position[i + 1]).norm(), (v - tr.velocity[i + 1]).norm()});
  }
  return worst;
}

}  // namespace

TEST_SUITE("ergodic") {
  TEST_CASE("basis is orthonormal and weighted") {
    const double lx = 3.0, ly = 2.0;
    FourierBasis basis(4, lx, ly);
    const int m = 200;
    std::vector<std::vector<double>> samples(basis.size());
    for (int iy = 0; iy < m; ++iy) {
      for (int ix = 0; ix < m; ++ix) {
        const Vec2 p((ix + 0.5) * lx / m, (iy + 0.5) * ly / m);
        for (std::size_t k = 0; k < basis.size(); ++k) samples[k].push_back(basis.evaluate(k, p));
      }
    }
    const double area = lx * ly / (m * m);
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = a; b < basis.size(); ++b) {
        double dot = 0.0;
        for (std::size_t i = 0; i < samples[a].size(); ++i) dot += samples[a][i] * samples[b][i];
        CHECK(std::abs(dot * area - (a == b ? 1.0 : 0.0)) < 1e-6);
      }
    }
    for (int k1 = 0; k1 < 4; ++k1)
      for (int k2 = 0; k2 < 4; ++k2)
        CHECK(basis.weight(basis.index(k1, k2)) == doctest::Approx(std::pow(1.0 + k1 * k1 + k2 * k2, -1.5)));
  }

  TEST_CASE("distribution coefficients") {
    FourierBasis basis(6, 10.0, 10.0);
    const auto uni = distribution_coefficients(uniform_phi(20, 10.0), basis);
    CHECK(uni[0] == doctest::Approx(1.0 / 10.0));
    for (std::size_t k = 1; k < uni.size(); ++k) CHECK(std::abs(uni[k]) < 1e-10);

    auto delta = uniform_phi(20, 10.0);
    std::fill(delta.density.begin(), delta.density.end(), 0.0);
    delta.density[57] = 1.0;
    const auto dc = distribution_coefficients(delta, basis);
    for (std::size_t k = 0; k < dc.size(); ++k) CHECK(dc[k] == doctest::Approx(basis.evaluate(k, delta.cell_center(57))));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random = uniform_phi(20, 10.0);
    for (auto& v : random.density) v = u(rng);
    const double s = random.sum();
    for (auto& v : random.density) v /= s;
    const auto rc = distribution_coefficients(random, basis);
    for (int k1 = 0; k1 < 6; ++k1) {
      for (int k2 = 0; k2 < 6; ++k2) {
        double expect = 0.0;
        for (std::size_t p = 0; p < random.density.size(); ++p)
          expect += random.density[p] * cosine_mode(k1, k2, random.cell_center(p), 10.0, 10.0);
        CHECK(std::abs(rc[basis.index(k1, k2)] - expect) < 1e-8);
      }
    }
  }

  TEST_CASE("trajectory coefficients") {
    FourierBasis basis(5, 10.0, 10.0);
    const Vec2 p1(2.0, 3.0), p2(7.5, 1.0);
    const auto one = trajectory_coefficients(bundle_of({stationary(p1, 50, 0.1)}), basis);
    const auto two = trajectory_coefficients(bundle_of({stationary(p1, 50, 0.1), stationary(p2, 50, 0.1)}), basis);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      CHECK(one[k] == doctest::Approx(basis.evaluate(k, p1)));
      CHECK(two[k] == doctest::Approx(0.5 * (basis.evaluate(k, p1) + basis.evaluate(k, p2))));
    }

    // periodic sweep: the sample mean matches the time integral
    const std::size_t n = 1'000'000;
    const double T = 20.0;
    Trajectory sweep;
    sweep.dt = T / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
      const double w = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
      sweep.position.emplace_back(5.0 + 3.0 * std::sin(w), 5.0 + 2.0 * std::cos(2.0 * w));
    }
    const auto sc = trajectory_coefficients(bundle_of({sweep}), basis);
    for (int k1 = 0; k1 < 5; ++k1) {
      for (int k2 = 0; k2 < 5; ++k2) {
        double trap = 0.0;
        const std::size_t m = 20000;
        for (std::size_t i = 0; i < m; ++i) {
          const double w = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(m);
          trap += cosine_mode(k1, k2, Vec2(5.0 + 3.0 * std::sin(w), 5.0 + 2.0 * std::cos(2.0 * w)), 10.0, 10.0);
        }
        CHECK(std::abs(sc[basis.index(k1, k2)] - trap / static_cast<double>(m)) < 1e-6);
      }
    }

    // two equal-length segments average
    Trajectory a = stationary(p1, 30, 0.1), b = stationary(p2, 30, 0.1);
    for (std::size_t i = 0; i < 30; ++i) {
      a.position[i] += Vec2(0.05 * i, 0.0);
      b.position[i] += Vec2(0.0, 0.1 * i);
    }
    Trajectory joined = a;
    joined.position.insert(joined.position.end(), b.position.begin(), b.position.end());
    const auto ca = trajectory_coefficients(bundle_of({a}), basis);
    const auto cb = trajectory_coefficients(bundle_of({b}), basis);
    const auto cj = trajectory_coefficients(bundle_of({joined}), basis);
    for (std::size_t k = 0; k < basis.size(); ++k) CHECK(cj[k] == doctest::Approx(0.5 * (ca[k] + cb[k])).epsilon(1e-12));
  }

  TEST_CASE("metric") {
    FourierBasis basis(4, 10.0, 10.0);
    std::vector<double> c(basis.size(), 0.1), phi = c;
    CHECK(ergodic_metric(c, phi, basis) == 0.0);
    phi[basis.index(2, 1)] += 0.3;
    CHECK(ergodic_metric(c, phi, basis) == doctest::Approx(basis.weight(basis.index(2, 1)) * 0.09));

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (auto& v : c) v = g(rng);
    for (auto& v : phi) v = g(rng);
    double naive = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) naive += basis.weight(k) * (c[k] - phi[k]) * (c[k] - phi[k]);
    CHECK(ergodic_metric(c, phi, basis) == naive);
    CHECK(ergodic_metric(c, phi, basis) > 0.0);
    CHECK_THROWS_AS(ergodic_metric(std::span<const double>(c).first(3), phi, basis), std::invalid_argument);
  }

  TEST_CASE("more modes never lower the metric") {
    auto phi = uniform_phi(20, 10.0);
    for (std::size_t p = 0; p < phi.density.size(); ++p) phi.density[p] = 1.0 + (p % 7 == 0 ? 4.0 : 0.0);
    const double s = phi.sum();
    for (auto& v : phi.density) v /= s;
    const auto bundle = bundle_of({stationary(Vec2(3.0, 4.0), 40, 0.1)});
    double prev = 0.0;
    for (int K : {3, 5, 8, 12}) {
      FourierBasis basis(K, 10.0, 10.0);
      const double m = ergodic_metric(trajectory_coefficients(bundle, basis), distribution_coefficients(phi, basis), basis);
      CHECK(m >= prev);
      prev = m;
    }
  }

  TEST_CASE("planner improves on a stationary robot") {
    FourierBasis basis(8, 10.0, 10.0);
    PlannerConfig cfg;
    cfg.horizon = 20.0;
    cfg.iterations = 60;
    const auto phi = uniform_phi(25, 10.0);
    const std::vector<RobotStart> starts{{Vec2(2.0, 2.0), Vec2::Zero()}};
    const auto result = plan_ergodic(starts, phi, cfg, basis);

    const auto steps = static_cast<std::size_t>(std::lround(cfg.horizon / cfg.dt));
    const auto still = bundle_of({stationary(Vec2(2.0, 2.0), steps + 1, cfg.dt)});
    const auto phi_c = distribution_coefficients(phi, basis);
    const double still_metric = ergodic_metric(trajectory_coefficients(still, basis), phi_c, basis);
    CHECK(result.metric < still_metric);

    for (std::size_t i = 1; i < result.objective_history.size(); ++i)
      CHECK(result.objective_history[i] <= result.objective_history[i - 1]);
    CHECK(result.objective == doctest::Approx(planner_objective(result.bundle, phi_c, cfg, basis)));

    for (const auto& tr : result.bundle.robots) {
      CHECK(resimulation_residual(tr) < 1e-9);
      for (const auto& u : tr.control) CHECK(u.norm() <= cfg.u_max + 1e-12);
    }
  }

  TEST_CASE("planner stays put on a delta at the start") {
    FourierBasis basis(8, 10.0, 10.0);
    PlannerConfig cfg;
    cfg.horizon = 10.0;
    cfg.iterations = 30;
    auto phi = uniform_phi(25, 10.0);
    std::fill(phi.density.begin(), phi.density.end(), 0.0);
    const std::size_t cell = 12 * 25 + 12;
    phi.density[cell] = 1.0;
    const std::vector<RobotStart> starts{{phi.cell_center(cell), Vec2::Zero()}};
    const auto result = plan_ergodic(starts, phi, cfg, basis);
    CHECK(result.objective <= result.objective_history.front());
    for (const auto& p : result.bundle.robots[0].position) CHECK((p - phi.cell_center(cell)).norm() < 0.5);
  }

  TEST_CASE("two robots keep their distance on a bimodal target") {
    FourierBasis basis(8, 10.0, 10.0);
    PlannerConfig cfg;
    cfg.horizon = 20.0;
    cfg.iterations = 60;
    auto phi = uniform_phi(25, 10.0);
    for (std::size_t p = 0; p < phi.density.size(); ++p) {
      const Vec2 c = phi.cell_center(p);
      phi.density[p] = std::exp(-(c - Vec2(3.0, 5.0)).squaredNorm()) + std::exp(-(c - Vec2(7.0, 5.0)).squaredNorm());
    }
    const double s = phi.sum();
    for (auto& v : phi.density) v /= s;
    const std::vector<RobotStart> starts{{Vec2(4.0, 5.0), Vec2::Zero()}, {Vec2(6.0, 5.0), Vec2::Zero()}};
    const auto result = plan_ergodic(starts, phi, cfg, basis);
    const auto& a = result.bundle.robots[0].position;
    const auto& b = result.bundle.robots[1].position;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() >= cfg.d_min);
  }

  TEST_CASE("charger nominal") {
    const double dt = 0.1;
    PursuitGains gains;

    SUBCASE("stays on a stationary team") {
      const Vec2 p(4.0, 4.0);
      const auto b = bundle_of({stationary(p, 201, dt), stationary(p, 201, dt)});
      const auto ch = plan_charger_nominal(b, {4.0, 4.0, 0.3}, gains);
      for (const auto& u : ch.control) CHECK(u.norm() < 1e-9);
    }

    SUBCASE("converges to the centroid of a square") {
      std::vector<Trajectory> corners;
      for (const Vec2& c : {Vec2(2, 2), Vec2(8, 2), Vec2(8, 8), Vec2(2, 8)}) corners.push_back(stationary(c, 601, dt));
      const auto ch = plan_charger_nominal(bundle_of(corners), {1.0, 9.0, 0.0}, gains);
      CHECK((ch.pose.back().position() - Vec2(5.0, 5.0)).norm() < 0.2);
      for (std::size_t i = 0; i < ch.control.size(); ++i) {
        const auto next = unicycle_step(ch.pose[i], ch.control[i], ch.dt);
        CHECK(std::abs(next.x - ch.pose[i + 1].x) < 1e-12);
        CHECK(std::abs(next.y - ch.pose[i + 1].y) < 1e-12);
        CHECK(std::abs(next.heading - ch.pose[i + 1].heading) < 1e-12);
      }
    }

    SUBCASE("tracks a circling robot within a tube") {
      Trajectory circle;
      circle.dt = dt;
      const double r = 2.0, period = 60.0;
      for (int i = 0; i <= 1200; ++i) {
        const double w = 2.0 * kPi * i * dt / period;
        circle.position.emplace_back(5.0 + r * std::cos(w), 5.0 + r * std::sin(w));
      }
      const auto ch = plan_charger_nominal(bundle_of({circle}), {7.0, 5.0, kPi / 2.0}, gains);
      double worst = 0.0;
      for (std::size_t i = 100; i < ch.pose.size(); ++i)
        worst = std::max(worst, (ch.pose[i].position() - circle.position_at(ch.start_time + i * ch.dt)).norm());
      // speed 2 pi r / period against a 0.5 m/s cap leaves a small lag
      CHECK(worst < 0.5);
    }
  }

  TEST_CASE("rollout and double integrator agree") {
    std::vector<Vec2> u{{0.1, 0.0}, {0.0, -0.2}, {0.3, 0.3}};
    const auto tr = rollout({Vec2(1.0, 1.0), Vec2(0.2, 0.0)}, u, 0.0, 0.1);
    CHECK(tr.position.size() == 4);
    CHECK(resimulation_residual(tr) < 1e-12);
  }
}
