#ifndef FITNESS_H
#define FITNESS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Bumped on every incompatible change to this interface.
#define FITNESS_ABI_VERSION 1

typedef enum FitnessStatus {
  FITNESS_STATUS_OK = 0,
  FITNESS_STATUS_NULL_ARGUMENT = 1,
  FITNESS_STATUS_INVALID_UTF8 = 2,
  FITNESS_STATUS_INVALID_ARGUMENT = 3,
  FITNESS_STATUS_DATA_ERROR = 4,
  FITNESS_STATUS_RUNTIME_ERROR = 5,
  FITNESS_STATUS_PANIC = 6,
} FitnessStatus;

// Causal effects of every protected feature of a dataset.
typedef struct FitnessCausalReport FitnessCausalReport;

// A loaded dataset with its schema.
typedef struct FitnessDataset FitnessDataset;

// Performance and fairness of one set of predictions. Fairness values
// that are undefined (a group without the needed rows) are NaN.
typedef struct FitnessGroupMetrics {
  double accuracy;
  double precision;
  double recall;
  double f1;
  double spd;
  double aod;
  double eod;
} FitnessGroupMetrics;

typedef struct FitnessMannWhitney {
  double u;
  double u_other;
  double p;
  bool exact;
} FitnessMannWhitney;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t fitness_abi_version(void);

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *fitness_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void fitness_string_free(char *s);

// Loads a CSV file. `schema` is a preset name (adult, compas, german,
// bank) or the path of a schema file.
//
// # Safety
// Strings must be NUL-terminated; `out` must be writable.
enum FitnessStatus fitness_dataset_load(const char *path,
                                        const char *schema,
                                        struct FitnessDataset **out);

// Generates a synthetic biased dataset from a spec such as
// `n=2000,p_priv=0.5,pf1=0.8,pf0=0.2`.
//
// # Safety
// `spec` must be NUL-terminated; `out` must be writable.
enum FitnessStatus fitness_dataset_synthetic(const char *spec,
                                             uint64_t seed,
                                             struct FitnessDataset **out);

// Replaces the protected features with a comma-separated list of column
// names declared in the schema.
//
// # Safety
// `dataset` must be a live handle; `names` must be NUL-terminated.
enum FitnessStatus fitness_dataset_set_protected(struct FitnessDataset *dataset, const char *names);

// # Safety
// `dataset` must be a live handle; `out` must be writable.
enum FitnessStatus fitness_dataset_rows(const struct FitnessDataset *dataset, uintptr_t *out);

// # Safety
// `dataset` must be NULL or a live handle, and is invalid afterwards.
void fitness_dataset_free(struct FitnessDataset *dataset);

// Estimates the causal effect of every protected feature with smoothing
// `lambda`.
//
// # Safety
// `dataset` must be a live handle; `out` must be writable.
enum FitnessStatus fitness_identify(const struct FitnessDataset *dataset,
                                    double lambda,
                                    struct FitnessCausalReport **out);

// Number of protected features in the report.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum FitnessStatus fitness_causal_report_features(const struct FitnessCausalReport *report,
                                                  uintptr_t *out);

// Difference of favorable intervened probabilities, privileged minus
// unprivileged, for feature `index`.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum FitnessStatus fitness_causal_report_acd(const struct FitnessCausalReport *report,
                                             uintptr_t index,
                                             double *out);

// Serializes the report to JSON. Free the result with
// [`fitness_string_free`].
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum FitnessStatus fitness_causal_report_to_json(const struct FitnessCausalReport *report,
                                                 char **out);

// # Safety
// `report` must be NULL or a live handle, and is invalid afterwards.
void fitness_causal_report_free(struct FitnessCausalReport *report);

// Scores `n` predictions. Labels, predictions and groups are 0 or 1;
// group 1 is privileged.
//
// # Safety
// Each array must hold `n` readable bytes; `out` must be writable.
enum FitnessStatus fitness_group_metrics(const uint8_t *y_true,
                                         const uint8_t *y_pred,
                                         const uint8_t *group,
                                         uintptr_t n,
                                         struct FitnessGroupMetrics *out);

// Two-sided Mann-Whitney U test of `a` against `b`.
//
// # Safety
// `a` and `b` must hold `n1` and `n2` readable values; `out` must be
// writable.
enum FitnessStatus fitness_mann_whitney_u(const double *a,
                                          uintptr_t n1,
                                          const double *b,
                                          uintptr_t n2,
                                          struct FitnessMannWhitney *out);

// Runs a repeated experiment. `config_json` holds the experiment settings,
// e.g. `{"model": "lr", "repeats": 10, "seed": 7}`; omitted fields take
// their defaults. On success `report_json` receives the run report, to be
// released with [`fitness_string_free`].
//
// # Safety
// `dataset` must be a live handle; `config_json` must be NUL-terminated;
// `report_json` must be writable.
enum FitnessStatus fitness_run_experiment(const struct FitnessDataset *dataset,
                                          const char *config_json,
                                          char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FITNESS_H */
