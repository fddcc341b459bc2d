#pragma once

#include <string>
#include <vector>

namespace mecl {

struct ReturnEvent {
  int robot = 0;         // 1-based id
  double time = 0.0;     // touchdown time
  double soc = 0.0;      // state of charge at touchdown
  double soc_fraction = 0.0;
};

struct Counters {
  int gap_violations = 0;
  int energy_violations = 0;
  int returns = 0;
  int failsafe_activations = 0;
  int charger_halts = 0;
  int retries = 0;
  int refused_additions = 0;
  int accepted_additions = 0;
  int removals = 0;
  int close_approaches = 0;  // pairwise distance below d_min, counted per step
  int unreachable_rendezvous = 0;
  bool overcapacity = false;
};

struct MetricsRecord {
  int robot_columns = 0;
  std::vector<double> time;
  std::vector<double> deficit;
  std::vector<std::vector<double>> soc;       // [sample][robot], NaN when absent
  std::vector<std::vector<double>> distance;  // horizontal distance to the charger
  std::vector<double> min_pair_distance;      // NaN with fewer than two airborne robots
  std::vector<ReturnEvent> returns;
  std::vector<double> epoch_metric;
  std::vector<double> charger_halt_times;
  std::vector<double> final_clarity;  // row-major cells at the end of the run
  Counters counters;
  std::vector<std::string> events;     // one JSON object per line
  std::vector<std::string> decisions;  // one JSON object per line
  std::string config_text;

  double final_deficit() const { return deficit.empty() ? 0.0 : deficit.back(); }
  /// Mean deficit over samples with t >= t_end / 2.
  double mean_deficit_final_half() const;
  /// Smallest gap between consecutive touchdowns (infinity with fewer than two).
  double min_return_separation() const;
};

std::string deficit_csv(const MetricsRecord& m);
std::string soc_csv(const MetricsRecord& m);
std::string distance_csv(const MetricsRecord& m);
std::string pairwise_csv(const MetricsRecord& m);
std::string events_ndjson(const MetricsRecord& m);
std::string decisions_ndjson(const MetricsRecord& m);
/// Aggregate document {config_echo, counters, series}.
std::string run_json(const MetricsRecord& m);

/// Writes the CSV/NDJSON files, plus run.json when `with_json` is set.
void write_metrics(const MetricsRecord& m, const std::string& directory, bool with_json);

}  // namespace mecl
