#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mecl/mecl.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInternal = 2;

struct ScenarioDeleter {
  void operator()(mecl_scenario* s) const { mecl_scenario_free(s); }
};
struct RunDeleter {
  void operator()(mecl_run* r) const { mecl_run_free(r); }
};
using ScenarioPtr = std::unique_ptr<mecl_scenario, ScenarioDeleter>;
using RunPtr = std::unique_ptr<mecl_run, RunDeleter>;

int exit_code(mecl_status status) {
  if (status == MECL_OK) return kExitOk;
  std::cerr << "error: " << mecl_last_error() << '\n';
  return status == MECL_INTERNAL_ERROR ? kExitInternal : kExitConfig;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mecl_string_free(s);
  return out;
}

int load(const std::string& path, const std::vector<std::string>& overrides, long long seed, ScenarioPtr& out) {
  if (!std::filesystem::exists(path)) {
    std::cerr << "error: scenario file '" << path << "' does not exist\n";
    return kExitConfig;
  }
  mecl_scenario* raw = nullptr;
  if (auto st = mecl_scenario_load(path.c_str(), &raw); st != MECL_OK) return exit_code(st);
  out.reset(raw);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects section.key=value, got '" << o << "'\n";
      return kExitConfig;
    }
    const std::string key = o.substr(0, eq);
    const std::string value = o.substr(eq + 1);
    if (auto st = mecl_scenario_set(out.get(), key.c_str(), value.c_str()); st != MECL_OK) return exit_code(st);
  }
  if (seed >= 0) {
    const std::string s = std::to_string(seed);
    if (auto st = mecl_scenario_set(out.get(), "sim.seed", s.c_str()); st != MECL_OK) return exit_code(st);
  }
  return exit_code(mecl_scenario_validate(out.get()));
}

void print_summary(const mecl_summary& s) {
  std::printf("returns=%d gap_violations=%d energy_violations=%d failsafe=%d charger_halts=%d "
              "final_deficit=%.6f mean_deficit_final_half=%.6f min_return_separation=%.3f\n",
              s.returns, s.gap_violations, s.energy_violations, s.failsafe_activations, s.charger_halts,
              s.final_deficit, s.mean_deficit_final_half, s.min_return_separation);
}

int cmd_run(const std::string& path, const std::vector<std::string>& overrides, long long seed,
            const std::string& out_dir, const std::string& format) {
  ScenarioPtr scenario;
  if (int rc = load(path, overrides, seed, scenario); rc != kExitOk) return rc;
  mecl_run* raw = nullptr;
  if (auto st = mecl_run_scenario(scenario.get(), &raw); st != MECL_OK) return exit_code(st);
  RunPtr run(raw);
  if (format == "json") {
    char* doc = nullptr;
    if (auto st = mecl_run_document(run.get(), &doc); st != MECL_OK) return exit_code(st);
    std::cout << take(doc);
    if (!out_dir.empty()) return exit_code(mecl_run_write(run.get(), out_dir.c_str(), 1));
    return kExitOk;
  }
  const std::string dir = out_dir.empty() ? "out" : out_dir;
  if (auto st = mecl_run_write(run.get(), dir.c_str(), 0); st != MECL_OK) return exit_code(st);
  mecl_summary s{};
  mecl_run_summary(run.get(), &s);
  print_summary(s);
  return kExitOk;
}

int cmd_sweep(const std::string& path, const std::vector<std::string>& overrides,
              const std::vector<long long>& seeds, const std::vector<std::string>& grid) {
  std::vector<std::vector<std::string>> combos{{}};
  for (const auto& g : grid) {
    const auto eq = g.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --grid expects section.key=v1,v2,..., got '" << g << "'\n";
      return kExitConfig;
    }
    std::vector<std::string> values;
    std::string rest = g.substr(eq + 1);
    for (std::size_t start = 0; start <= rest.size();) {
      const auto comma = std::min(rest.find(',', start), rest.size());
      values.push_back(g.substr(0, eq) + "=" + rest.substr(start, comma - start));
      start = comma + 1;
    }
    std::vector<std::vector<std::string>> next;
    for (const auto& c : combos)
      for (const auto& v : values) {
        auto n = c;
        n.push_back(v);
        next.push_back(n);
      }
    combos = next;
  }
  std::printf("seed,settings,returns,gap_violations,energy_violations,final_deficit,mean_deficit_final_half\n");
  for (const auto& combo : combos) {
    for (long long seed : seeds) {
      auto all = overrides;
      all.insert(all.end(), combo.begin(), combo.end());
      ScenarioPtr scenario;
      if (int rc = load(path, all, seed, scenario); rc != kExitOk) return rc;
      mecl_run* raw = nullptr;
      if (auto st = mecl_run_scenario(scenario.get(), &raw); st != MECL_OK) return exit_code(st);
      RunPtr run(raw);
      mecl_summary s{};
      mecl_run_summary(run.get(), &s);
      std::string settings;
      for (const auto& c : combo) settings += (settings.empty() ? "" : ";") + c;
      std::printf("%lld,%s,%d,%d,%d,%.6f,%.6f\n", seed, settings.c_str(), s.returns, s.gap_violations,
                  s.energy_violations, s.final_deficit, s.mean_deficit_final_half);
    }
  }
  return kExitOk;
}

int cmd_compare(const std::string& path, const std::vector<std::string>& overrides, long long seed,
                const std::string& modes, const std::string& out_dir) {
  ScenarioPtr scenario;
  if (int rc = load(path, overrides, seed, scenario); rc != kExitOk) return rc;
  char* csv = nullptr;
  char* summary = nullptr;
  if (auto st = mecl_compare(scenario.get(), modes.c_str(), &csv, &summary); st != MECL_OK) return exit_code(st);
  const std::string table = take(csv);
  std::cout << take(summary);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "comparison.csv", std::ios::binary) << table;
  }
  return kExitOk;
}

int cmd_verify(long long seed, int samples) {
  char* report = nullptr;
  int pass = 0;
  if (auto st = mecl_verify(static_cast<uint64_t>(seed), samples, &report, &pass); st != MECL_OK)
    return exit_code(st);
  std::cout << take(report);
  return pass ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot ergodic coverage with recharging schedules"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::vector<std::string> overrides;
  long long seed = -1;
  std::string out_dir;
  std::string format = "csv";
  std::vector<long long> seeds{1};
  std::vector<std::string> grid;
  std::string modes = "gen_tisd,uniform_tisd,lawnmower";
  int samples = 25;

  auto* run = app.add_subcommand("run", "Simulate one scenario and write metrics");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Override sim.seed");
  run->add_option("--out", out_dir, "Output directory (csv default: ./out)");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--set", overrides, "Override section.key=value");

  auto* sweep = app.add_subcommand("sweep", "Run a scenario over seeds and parameter values");
  sweep->add_option("scenario", scenario_path, "Scenario file")->required();
  sweep->add_option("--seeds", seeds, "Seeds to run")->delimiter(',');
  sweep->add_option("--grid", grid, "section.key=v1,v2,... (cartesian product over all --grid)");
  sweep->add_option("--set", overrides, "Override section.key=value");

  auto* verify = app.add_subcommand("verify", "Run the seeded oracle checks");
  verify->add_option("--seed", seed, "Random seed");
  verify->add_option("--samples", samples, "Random cases per check")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "Run one scenario under several planner modes");
  compare->add_option("scenario", scenario_path, "Scenario file")->required();
  compare->add_option("--seed", seed, "Override sim.seed");
  compare->add_option("--modes", modes, "Comma-separated planner modes");
  compare->add_option("--out", out_dir, "Directory for comparison.csv");
  compare->add_option("--set", overrides, "Override section.key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  if (*run) return cmd_run(scenario_path, overrides, seed, out_dir, format);
  if (*sweep) return cmd_sweep(scenario_path, overrides, seeds, grid);
  if (*verify) return cmd_verify(seed < 0 ? 1 : seed, samples);
  if (*compare) return cmd_compare(scenario_path, overrides, seed, modes, out_dir);
  return kExitConfig;
}
