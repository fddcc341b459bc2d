#include <cmath>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mecl/metrics.hpp"
#include "mecl/simulation.hpp"

using namespace mecl;

namespace {

ScenarioConfig quick(int robots, double capacity, double duration) {
  ScenarioConfig cfg;
  cfg.width_cells = cfg.height_cells = 10;
  cfg.robot_count = robots;
  cfg.battery.capacity = capacity;
  cfg.planner.iterations = 15;
  cfg.modes = 6;
  cfg.duration = duration;
  cfg.charger_noise.process.diagonal() << 5e-4, 5e-4, 1e-4;
  return cfg;
}

int count_events(const MetricsRecord& m, const std::string& type) {
  int n = 0;
  for (const auto& line : m.events)
    if (nlohmann::json::parse(line).value("type", "") == type) ++n;
  return n;
}

void check_safe(const MetricsRecord& m) {
  CHECK(m.counters.gap_violations == 0);
  CHECK(m.counters.energy_violations == 0);
  for (const auto& r : m.returns) CHECK(r.soc >= 0.0);
  for (std::size_t i = 1; i < m.returns.size(); ++i) CHECK(m.returns[i - 1].time <= m.returns[i].time);
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("single robot on a uniform target keeps returning safely") {
    auto cfg = quick(1, 40.0, 200.0);
    cfg.planner_mode = PlannerMode::UniformTisd;
    const auto m = run_scenario(cfg);
    CHECK(m.counters.returns >= 2);
    check_safe(m);
    CHECK(m.time.size() == m.deficit.size());
    CHECK(m.soc.size() == m.time.size());
    CHECK(m.time.back() == doctest::Approx(200.0));
  }

  TEST_CASE("reruns are byte-identical") {
    auto cfg = quick(2, 60.0, 120.0);
    cfg.drop_probability = 0.05;
    const auto a = run_scenario(cfg);
    const auto b = run_scenario(cfg);
    CHECK(deficit_csv(a) == deficit_csv(b));
    CHECK(soc_csv(a) == soc_csv(b));
    CHECK(distance_csv(a) == distance_csv(b));
    CHECK(pairwise_csv(a) == pairwise_csv(b));
    CHECK(events_ndjson(a) == events_ndjson(b));
    CHECK(decisions_ndjson(a) == decisions_ndjson(b));
    CHECK(run_json(a) == run_json(b));

    cfg.seed = 2;
    CHECK(soc_csv(run_scenario(cfg)) != soc_csv(a));
  }

  TEST_CASE("aggregate document has the documented shape") {
    const auto m = run_scenario(quick(1, 60.0, 30.0));
    const auto doc = nlohmann::json::parse(run_json(m));
    REQUIRE(doc.is_object());
    CHECK(doc.contains("config_echo"));
    CHECK(doc["counters"].contains("gap_violations"));
    CHECK(doc["counters"].contains("energy_violations"));
    const auto& series = doc["series"];
    CHECK(series["t"].size() == m.time.size());
    CHECK(series["deficit"].size() == m.time.size());
    for (const auto& line : m.decisions) CHECK(nlohmann::json::parse(line).is_object());
  }

  TEST_CASE("invalid configurations are rejected before running") {
    auto cfg = quick(1, 60.0, 30.0);
    cfg.scheduler.rendezvous_horizon = 40.0;
    CHECK_THROWS_AS(run_scenario(cfg), ConfigError);
  }

  TEST_CASE("deficit stays in range and clarity in [0, 1]") {
    const auto m = run_scenario(quick(2, 60.0, 60.0));
    for (double d : m.deficit) {
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
    for (double q : m.final_clarity) {
      CHECK(q >= 0.0);
      CHECK(q <= 1.0);
    }
  }

  TEST_CASE("admission follows the flight-time bound") {
    SUBCASE("accepted early") {
      auto cfg = quick(1, 100.0, 150.0);
      cfg.robot_additions = {10.0};
      const auto m = run_scenario(cfg);
      CHECK(m.counters.accepted_additions == 1);
      CHECK(m.counters.refused_additions == 0);
      CHECK(m.robot_columns == 2);
      check_safe(m);
    }
    SUBCASE("refused once the team is short on flight time") {
      auto cfg = quick(2, 40.0, 60.0);
      cfg.robot_additions = {20.0};
      const auto m = run_scenario(cfg);
      CHECK(m.counters.refused_additions == 1);
      CHECK(m.counters.accepted_additions == 0);
      CHECK(count_events(m, "robot_add_refused") == 1);
    }
  }

  TEST_CASE("removing a robot leaves the schedule safe") {
    auto cfg = quick(3, 80.0, 200.0);
    cfg.robot_removals = {{2, 30.0}};
    const auto m = run_scenario(cfg);
    CHECK(m.counters.removals == 1);
    check_safe(m);
    for (const auto& r : m.returns) {
      if (r.robot == 2) CHECK(r.time <= 30.0);
    }
  }

  TEST_CASE("temporary central failure halts the charger and recovers") {
    auto cfg = quick(2, 80.0, 150.0);
    cfg.failsafe_budget = true;
    cfg.failures = {{30.0, 30.0}};
    const auto m = run_scenario(cfg);
    CHECK(m.counters.charger_halts >= 1);
    CHECK(m.counters.failsafe_activations >= 1);
    CHECK(count_events(m, "central_failed") == 1);
    CHECK(count_events(m, "central_recovered") == 1);
    CHECK(m.counters.energy_violations == 0);
    for (double t : m.charger_halt_times) CHECK(t >= 30.0);
  }

  TEST_CASE("overcapacity is recorded when allowed") {
    auto cfg = quick(4, 40.0, 20.0);
    cfg.allow_overcapacity = true;
    const auto m = run_scenario(cfg);
    CHECK(m.counters.overcapacity);
  }
}
