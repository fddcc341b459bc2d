#include "mecl/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include "json.hpp"
#include <stdexcept>

namespace mecl {

namespace {

std::string cell(double v) { return std::isfinite(v) ? fmt::format("{:.6f}", v) : std::string(); }

std::string per_robot_csv(const MetricsRecord& m, const std::vector<std::vector<double>>& rows, const char* prefix) {
  std::string out = "t";
  for (int i = 1; i <= m.robot_columns; ++i) out += fmt::format(",{}{}", prefix, i);
  out += '\n';
  for (std::size_t s = 0; s < m.time.size(); ++s) {
    out += fmt::format("{:.3f}", m.time[s]);
    for (int i = 0; i < m.robot_columns; ++i) {
      out += ',';
      if (static_cast<std::size_t>(i) < rows[s].size()) out += cell(rows[s][static_cast<std::size_t>(i)]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json nullable(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

}  // namespace

double MetricsRecord::mean_deficit_final_half() const {
  if (time.empty()) return 0.0;
  const double half = 0.5 * time.back();
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (time[i] + 1e-9 < half) continue;
    sum += deficit[i];
    ++n;
  }
  return n ? sum / n : 0.0;
}

double MetricsRecord::min_return_separation() const {
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < returns.size(); ++i) out = std::min(out, returns[i].time - returns[i - 1].time);
  return out;
}

std::string deficit_csv(const MetricsRecord& m) {
  std::string out = "t,deficit\n";
  for (std::size_t i = 0; i < m.time.size(); ++i) out += fmt::format("{:.3f},{:.9f}\n", m.time[i], m.deficit[i]);
  return out;
}

std::string soc_csv(const MetricsRecord& m) { return per_robot_csv(m, m.soc, "e_"); }

std::string distance_csv(const MetricsRecord& m) { return per_robot_csv(m, m.distance, "d_"); }

std::string pairwise_csv(const MetricsRecord& m) {
  std::string out = "t,min_pair_dist\n";
  for (std::size_t i = 0; i < m.time.size(); ++i)
    out += fmt::format("{:.3f},{}\n", m.time[i], cell(m.min_pair_distance[i]));
  return out;
}

std::string events_ndjson(const MetricsRecord& m) {
  std::string out;
  for (const auto& e : m.events) out += e + '\n';
  return out;
}

std::string decisions_ndjson(const MetricsRecord& m) {
  std::string out;
  for (const auto& d : m.decisions) out += d + '\n';
  return out;
}

std::string run_json(const MetricsRecord& m) {
  nlohmann::ordered_json doc;
  doc["config_echo"] = m.config_text;
  const Counters& c = m.counters;
  doc["counters"] = {{"gap_violations", c.gap_violations},
                     {"energy_violations", c.energy_violations},
                     {"returns", c.returns},
                     {"failsafe_activations", c.failsafe_activations},
                     {"charger_halts", c.charger_halts},
                     {"retries", c.retries},
                     {"refused_additions", c.refused_additions},
                     {"accepted_additions", c.accepted_additions},
                     {"removals", c.removals},
                     {"close_approaches", c.close_approaches},
                     {"unreachable_rendezvous", c.unreachable_rendezvous},
                     {"overcapacity", c.overcapacity}};
  nlohmann::ordered_json series;
  series["t"] = m.time;
  series["deficit"] = m.deficit;
  auto soc = nlohmann::json::array();
  auto dist = nlohmann::json::array();
  for (std::size_t s = 0; s < m.time.size(); ++s) {
    auto srow = nlohmann::json::array();
    auto drow = nlohmann::json::array();
    for (std::size_t i = 0; i < m.soc[s].size(); ++i) {
      srow.push_back(nullable(m.soc[s][i]));
      drow.push_back(nullable(m.distance[s][i]));
    }
    soc.push_back(srow);
    dist.push_back(drow);
  }
  series["soc"] = soc;
  series["distance"] = dist;
  auto pair = nlohmann::json::array();
  for (double v : m.min_pair_distance) pair.push_back(nullable(v));
  series["min_pair_distance"] = pair;
  series["epoch_metric"] = m.epoch_metric;
  auto returns = nlohmann::json::array();
  for (const auto& r : m.returns)
    returns.push_back({{"robot", r.robot}, {"t", r.time}, {"soc", r.soc}, {"soc_fraction", r.soc_fraction}});
  series["returns"] = returns;
  doc["series"] = series;
  return doc.dump() + '\n';
}

void write_metrics(const MetricsRecord& m, const std::string& directory, bool with_json) {
  const std::filesystem::path dir(directory);
  std::filesystem::create_directories(dir);
  write_file(dir / "deficit.csv", deficit_csv(m));
  write_file(dir / "soc.csv", soc_csv(m));
  write_file(dir / "dist.csv", distance_csv(m));
  write_file(dir / "pairwise.csv", pairwise_csv(m));
  write_file(dir / "events.ndjson", events_ndjson(m));
  write_file(dir / "decisions.ndjson", decisions_ndjson(m));
  if (with_json) write_file(dir / "run.json", run_json(m));
}

}  // namespace mecl
