#ifndef MECL_MECL_H
#define MECL_MECL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(MECL_BUILDING_LIBRARY)
#define MECL_API __attribute__((visibility("default")))
#else
#define MECL_API
#endif

typedef enum mecl_status {
  MECL_OK = 0,
  MECL_CONFIG_ERROR = 1,
  MECL_INTERNAL_ERROR = 2,
  MECL_INVALID_ARGUMENT = 3,
  MECL_UNATTAINABLE = 4
} mecl_status;

typedef struct mecl_scenario mecl_scenario;
typedef struct mecl_run mecl_run;

typedef struct mecl_summary {
  int returns;
  int gap_violations;
  int energy_violations;
  int failsafe_activations;
  int charger_halts;
  int refused_additions;
  int close_approaches;
  int overcapacity;
  double final_deficit;
  double mean_deficit_final_half;
  double min_return_separation; /* infinity with fewer than two returns */
  double min_return_soc;        /* infinity without returns */
} mecl_summary;

/* Message for the most recent failure on the calling thread; never NULL. */
MECL_API const char* mecl_last_error(void);

/* Strings returned through char** are owned by the caller. */
MECL_API void mecl_string_free(char* s);

MECL_API mecl_status mecl_scenario_default(mecl_scenario** out);
MECL_API mecl_status mecl_scenario_load(const char* path, mecl_scenario** out);
MECL_API mecl_status mecl_scenario_parse(const char* text, mecl_scenario** out);
/* key is "section.key"; value uses scenario-file syntax. */
MECL_API mecl_status mecl_scenario_set(mecl_scenario* scenario, const char* key, const char* value);
MECL_API mecl_status mecl_scenario_validate(const mecl_scenario* scenario);
MECL_API mecl_status mecl_scenario_to_text(const mecl_scenario* scenario, char** out);
MECL_API void mecl_scenario_free(mecl_scenario* scenario);

MECL_API mecl_status mecl_run_scenario(const mecl_scenario* scenario, mecl_run** out);
MECL_API mecl_status mecl_run_summary(const mecl_run* run, mecl_summary* out);
/* Writes deficit.csv, soc.csv, dist.csv, pairwise.csv, events.ndjson,
   decisions.ndjson and, when with_json is nonzero, run.json. */
MECL_API mecl_status mecl_run_write(const mecl_run* run, const char* directory, int with_json);
MECL_API mecl_status mecl_run_document(const mecl_run* run, char** out);
MECL_API void mecl_run_free(mecl_run* run);

/* Runs the scenario once per comma-separated planner mode. */
MECL_API mecl_status mecl_compare(const mecl_scenario* scenario, const char* modes, char** csv_out,
                                  char** summary_out);

MECL_API mecl_status mecl_verify(uint64_t seed, int samples, char** report_out, int* all_pass);

MECL_API mecl_status mecl_clarity_closed_form(double t, double q0, double k, double process_noise, double* out);
MECL_API mecl_status mecl_clarity_time_to(double q0, double q1, double k, double process_noise, double* out);
MECL_API int mecl_max_supported_robots(double min_flight_time, double rendezvous_horizon, double decision_interval,
                                       double gap);

#ifdef __cplusplus
}
#endif

#endif
