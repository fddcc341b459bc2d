#include "mecl/mecl.h"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

#include "mecl/baselines.hpp"
#include "mecl/clarity.hpp"
#include "mecl/scenario.hpp"
#include "mecl/simulation.hpp"
#include "mecl/verify.hpp"

struct mecl_scenario {
  mecl::ScenarioConfig config;
};

struct mecl_run {
  mecl::MetricsRecord metrics;
};

namespace {

thread_local std::string last_error;

mecl_status fail(mecl_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class Fn>
mecl_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const mecl::ConfigError& e) {
    return fail(MECL_CONFIG_ERROR, e.what());
  } catch (const mecl::UnattainableTarget& e) {
    return fail(MECL_UNATTAINABLE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MECL_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(MECL_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(MECL_INTERNAL_ERROR, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* mecl_last_error(void) { return last_error.c_str(); }

void mecl_string_free(char* s) { delete[] s; }

mecl_status mecl_scenario_default(mecl_scenario** out) {
  if (!out) return fail(MECL_INVALID_ARGUMENT, "out is null");
  return guarded([&] {
    *out = new mecl_scenario{};
    return MECL_OK;
  });
}

mecl_status mecl_scenario_load(const char* path, mecl_scenario** out) {
  if (!path || !out) return fail(MECL_INVALID_ARGUMENT, "path or out is null");
  return guarded([&] {
    *out = new mecl_scenario{mecl::load_scenario(path)};
    return MECL_OK;
  });
}

mecl_status mecl_scenario_parse(const char* text, mecl_scenario** out) {
  if (!text || !out) return fail(MECL_INVALID_ARGUMENT, "text or out is null");
  return guarded([&] {
    *out = new mecl_scenario{mecl::parse_scenario(text)};
    return MECL_OK;
  });
}

mecl_status mecl_scenario_set(mecl_scenario* scenario, const char* key, const char* value) {
  if (!scenario || !key || !value) return fail(MECL_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    mecl::apply_override(scenario->config, key, value);
    return MECL_OK;
  });
}

mecl_status mecl_scenario_validate(const mecl_scenario* scenario) {
  if (!scenario) return fail(MECL_INVALID_ARGUMENT, "scenario is null");
  return guarded([&] {
    scenario->config.validate();
    return MECL_OK;
  });
}

mecl_status mecl_scenario_to_text(const mecl_scenario* scenario, char** out) {
  if (!scenario || !out) return fail(MECL_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = copy_string(scenario->config.to_text());
    return MECL_OK;
  });
}

void mecl_scenario_free(mecl_scenario* scenario) { delete scenario; }

mecl_status mecl_run_scenario(const mecl_scenario* scenario, mecl_run** out) {
  if (!scenario || !out) return fail(MECL_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new mecl_run{mecl::run_scenario(scenario->config)};
    return MECL_OK;
  });
}

mecl_status mecl_run_summary(const mecl_run* run, mecl_summary* out) {
  if (!run || !out) return fail(MECL_INVALID_ARGUMENT, "null argument");
  const auto& m = run->metrics;
  const auto& c = m.counters;
  out->returns = c.returns;
  out->gap_violations = c.gap_violations;
  out->energy_violations = c.energy_violations;
  out->failsafe_activations = c.failsafe_activations;
  out->charger_halts = c.charger_halts;
  out->refused_additions = c.refused_additions;
  out->close_approaches = c.close_approaches;
  out->overcapacity = c.overcapacity ? 1 : 0;
  out->final_deficit = m.final_deficit();
  out->mean_deficit_final_half = m.mean_deficit_final_half();
  out->min_return_separation = m.min_return_separation();
  out->min_return_soc = std::numeric_limits<double>::infinity();
  for (const auto& r : m.returns) out->min_return_soc = std::min(out->min_return_soc, r.soc);
  return MECL_OK;
}

mecl_status mecl_run_write(const mecl_run* run, const char* directory, int with_json) {
  if (!run || !directory) return fail(MECL_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    mecl::write_metrics(run->metrics, directory, with_json != 0);
    return MECL_OK;
  });
}

mecl_status mecl_run_document(const mecl_run* run, char** out) {
  if (!run || !out) return fail(MECL_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = copy_string(mecl::run_json(run->metrics));
    return MECL_OK;
  });
}

void mecl_run_free(mecl_run* run) { delete run; }

mecl_status mecl_compare(const mecl_scenario* scenario, const char* modes, char** csv_out, char** summary_out) {
  if (!scenario || !modes) return fail(MECL_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<mecl::ScenarioConfig> cfgs;
    std::string list = modes;
    std::size_t start = 0;
    while (start <= list.size()) {
      const auto comma = std::min(list.find(',', start), list.size());
      std::string mode = list.substr(start, comma - start);
      mode.erase(0, mode.find_first_not_of(' '));
      mode.erase(mode.find_last_not_of(' ') + 1);
      if (!mode.empty()) {
        mecl::ScenarioConfig cfg = scenario->config;
        cfg.planner_mode = mecl::planner_mode_from_string(mode);
        cfgs.push_back(cfg);
      }
      start = comma + 1;
    }
    const auto table = mecl::compare_planners(cfgs);
    if (csv_out) *csv_out = copy_string(table.to_csv());
    if (summary_out) *summary_out = copy_string(table.summary());
    return MECL_OK;
  });
}

mecl_status mecl_verify(uint64_t seed, int samples, char** report_out, int* all_pass) {
  if (samples < 1) return fail(MECL_INVALID_ARGUMENT, "samples must be >= 1");
  return guarded([&] {
    const auto report = mecl::run_verification(seed, samples);
    if (report_out) *report_out = copy_string(report.text);
    if (all_pass) *all_pass = report.ok ? 1 : 0;
    return MECL_OK;
  });
}

mecl_status mecl_clarity_closed_form(double t, double q0, double k, double process_noise, double* out) {
  if (!out) return fail(MECL_INVALID_ARGUMENT, "out is null");
  return guarded([&] {
    *out = mecl::clarity_closed_form(t, q0, k, process_noise);
    return MECL_OK;
  });
}

mecl_status mecl_clarity_time_to(double q0, double q1, double k, double process_noise, double* out) {
  if (!out) return fail(MECL_INVALID_ARGUMENT, "out is null");
  return guarded([&] {
    *out = mecl::clarity_time_to(q0, q1, k, process_noise);
    return MECL_OK;
  });
}

int mecl_max_supported_robots(double min_flight_time, double rendezvous_horizon, double decision_interval,
                              double gap) {
  mecl::SchedulerConfig cfg;
  cfg.rendezvous_horizon = rendezvous_horizon;
  cfg.decision_interval = decision_interval;
  cfg.charge_time = 0.0;
  cfg.buffer_time = gap;
  return mecl::max_supported_robots(min_flight_time, cfg);
}

}  // extern "C"
