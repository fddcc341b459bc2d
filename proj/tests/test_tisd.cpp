#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mecl/scenario.hpp"
#include "mecl/tisd.hpp"
#include "oracles.hpp"

using namespace mecl;

namespace {

EnvironmentGrid row(std::vector<double> q, std::vector<double> target, std::vector<double> noise) {
  EnvironmentGrid g(q.size(), 1, static_cast<double>(q.size()), 1.0);
  g.clarity() = std::move(q);
  g.target() = std::move(target);
  g.process_noise() = std::move(noise);
  return g;
}

void check_valid(const SpatialDistribution& phi, const EnvironmentGrid& grid) {
  double sum = 0.0;
  for (double v : phi.density) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
  bool any_unsatisfied = false;
  for (std::size_t i = 0; i < grid.size(); ++i) any_unsatisfied |= grid.clarity()[i] < grid.target()[i];
  if (!any_unsatisfied) return;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.clarity()[i] >= grid.target()[i]) CHECK(phi.density[i] == 0.0);
}

}  // namespace

TEST_SUITE("tisd") {
  const SensorModel unit_sensor{1.0, 1.0, 1.0};

  TEST_CASE("symmetric cells share mass") {
    const auto g = row({0.1, 0.1}, {0.4, 0.4}, {0.2, 0.2});
    const auto phi = gen_tisd(g, unit_sensor, 1);
    CHECK(phi.density[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(phi.density[1] == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("satisfied cell gets no mass") {
    const auto g = row({0.45, 0.1}, {0.4, 0.4}, {1.0, 1.0});
    const auto phi = gen_tisd(g, unit_sensor, 1);
    CHECK(phi.density[0] == 0.0);
    CHECK(phi.density[1] == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("weights follow bisection times with the clamp") {
    const auto g = row({0.1, 0.1, 0.1}, {0.3, 0.5, 0.7}, {1.0, 1.0, 1.0});
    const double eps = 1e-3;
    const auto phi = gen_tisd(g, unit_sensor, 1, eps);
    std::vector<double> expected;
    for (double target : {0.3, 0.5, 0.7})
      expected.push_back(oracle::clarity_time_by_bisection(0.1, std::min(target, 0.5 - eps), 1.0, 1.0));
    const double total = std::accumulate(expected.begin(), expected.end(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(phi.density[i] == doctest::Approx(expected[i] / total).epsilon(1e-6));
  }

  TEST_CASE("noiseless cells use the decay-free time") {
    const auto g = row({0.1, 0.3}, {0.6, 0.6}, {0.0, 0.0});
    const auto w = tisd_weights(g, unit_sensor, 2);
    const double S = 2.0;
    CHECK(w[0] == doctest::Approx((1.0 / 0.4 - 1.0 / 0.9) / S).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx((1.0 / 0.4 - 1.0 / 0.7) / S).epsilon(1e-12));
  }

  TEST_CASE("all satisfied falls back to uniform") {
    const auto g = row({0.5, 0.6, 0.7}, {0.4, 0.4, 0.4}, {0.1, 0.1, 0.1});
    const auto phi = gen_tisd(g, unit_sensor, 1);
    for (double v : phi.density) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("valid on every preset") {
    SensorModel sensor{0.57, 1.0, 0.1};
    for (const char* preset : {"env1", "env2", "env3", "env4", "env5"}) {
      CAPTURE(preset);
      auto grid = make_environment(preset, 25, 25, 10.0, 10.0, 0.01);
      check_valid(gen_tisd(grid, sensor, 4), grid);
      // partially satisfied: lift a block of cells above target
      for (std::size_t i = 0; i < grid.size(); i += 3) grid.clarity()[i] = 0.95;
      check_valid(gen_tisd(grid, sensor, 4), grid);
    }
  }

  TEST_CASE("lowering a cell's clarity never lowers its weight") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.4);
    auto g = make_environment("env2", 8, 8, 4.0, 4.0, 0.01);
    for (auto& q : g.clarity()) q = u(rng);
    SensorModel sensor{0.5, 1.0, 0.1};
    for (std::size_t cell : {0u, 17u, 40u}) {
      const double before = gen_tisd(g, sensor, 3).density[cell];
      auto lower = g;
      lower.clarity()[cell] *= 0.5;
      CHECK(gen_tisd(lower, sensor, 3).density[cell] >= before);
    }
  }

  TEST_CASE("renormalizing is a no-op") {
    auto g = make_environment("env4", 10, 10, 10.0, 10.0, 0.01);
    const auto phi = gen_tisd(g, SensorModel{0.8, 1.0, 0.1}, 4);
    const double s = phi.sum();
    for (double v : phi.density) CHECK(v / s == doctest::Approx(v).epsilon(1e-15));
  }
}
