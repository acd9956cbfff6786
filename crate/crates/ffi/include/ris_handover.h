#ifndef RIS_HANDOVER_H
#define RIS_HANDOVER_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible function.
typedef enum RhStatus {
  RH_STATUS_OK = 0,
  RH_STATUS_NULL_POINTER = 1,
  RH_STATUS_INVALID_UTF8 = 2,
  RH_STATUS_CONFIG = 3,
  RH_STATUS_IO = 4,
  RH_STATUS_PARSE = 5,
  RH_STATUS_DOMAIN = 6,
  RH_STATUS_INFEASIBLE = 7,
  RH_STATUS_BUFFER_TOO_SMALL = 8,
  RH_STATUS_PANIC = 99,
} RhStatus;

// Opaque trained assignment network.
typedef struct RhAnnModel RhAnnModel;

// Opaque scenario configuration.
typedef struct RhConfig RhConfig;

// Trial outputs. Means without any contributing handover are NaN.
typedef struct RhTrialMetrics {
  // Mean hard-handover rate (bit/s).
  double rate_hard;
  // Mean soft-handover rate (bit/s).
  double rate_soft;
  // Mean hard-handover latency (s).
  double latency_hard;
  // Mean soft-handover latency (s).
  double latency_soft;
  uint64_t handovers_hard;
  uint64_t handovers_soft;
  uint64_t bridge_events;
  double hole_fraction;
  // Mean rate over all steps (bit/s).
  double rate_mean;
  double latency_mean;
  uint64_t steps;
  uint64_t hole_steps;
} RhTrialMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` as a
// NUL-terminated string and returns the full message length in bytes.
// With a null `buf` or a `len` too small nothing is written.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t rh_last_error_message(char *buf, size_t len);

// Creates a configuration holding the defaults.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum RhStatus rh_config_new(struct RhConfig **out);

// Parses a TOML scenario.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid handle slot.
enum RhStatus rh_config_from_toml(const char *toml, struct RhConfig **out);

// Loads a TOML scenario file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid handle slot.
enum RhStatus rh_config_load(const char *path, struct RhConfig **out);

// # Safety
// `cfg` must be null or a handle from `rh_config_*` not yet freed.
void rh_config_free(struct RhConfig *cfg);

// # Safety
// `cfg` must be a live configuration handle.
enum RhStatus rh_config_set_seed(struct RhConfig *cfg, uint64_t seed);

// Sets the AP count. Rejected values leave the configuration unchanged.
//
// # Safety
// `cfg` must be a live configuration handle.
enum RhStatus rh_config_set_ap_count(struct RhConfig *cfg, size_t count);

// # Safety
// `cfg` must be a live configuration handle.
enum RhStatus rh_config_set_ris_enabled(struct RhConfig *cfg, bool enabled);

// Sets the simulated duration in seconds. Rejected values leave the
// configuration unchanged.
//
// # Safety
// `cfg` must be a live configuration handle.
enum RhStatus rh_config_set_duration(struct RhConfig *cfg, double seconds);

// Runs one trial and writes its metrics to `out`.
//
// # Safety
// `cfg` must be a live configuration handle and `out` writable.
enum RhStatus rh_run_trial(const struct RhConfig *cfg, uint64_t trial, struct RhTrialMetrics *out);

// Loads a model written by `ris-handover train-ann`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid handle slot.
enum RhStatus rh_ann_load(const char *path, struct RhAnnModel **out);

// # Safety
// `model` must be null or a handle from `rh_ann_load` not yet freed.
void rh_ann_free(struct RhAnnModel *model);

// Reports the AP count `N` and element count `M` the model was built for.
//
// # Safety
// `model` must be a live handle; `n_aps` and `n_elements` writable.
enum RhStatus rh_ann_dims(const struct RhAnnModel *model, size_t *n_aps, size_t *n_elements);

// Predicts one AP id per element from the blockage degrees of the `N` APs
// and the receiver position.
//
// # Safety
// `degrees` must point to `n_aps` doubles and `out` to `n_elements`
// writable `size_t` slots.
enum RhStatus rh_ann_predict(const struct RhAnnModel *model,
                             const double *degrees,
                             size_t n_aps,
                             double x,
                             double y,
                             size_t *out,
                             size_t n_elements);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIS_HANDOVER_H */
