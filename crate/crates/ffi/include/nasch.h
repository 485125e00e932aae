#ifndef NASCH_H
#define NASCH_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NaschOutputMode {
  NASCH_OUTPUT_MODE_NONE = 0,
  NASCH_OUTPUT_MODE_ASCII = 1,
  NASCH_OUTPUT_MODE_PGM = 2,
} NaschOutputMode;

typedef enum NaschStatus {
  NASCH_STATUS_OK = 0,
  NASCH_STATUS_NULL_POINTER = 1,
  NASCH_STATUS_INVALID_PARAMS = 2,
  NASCH_STATUS_INVALID_ARGUMENT = 3,
  NASCH_STATUS_BUFFER_TOO_SMALL = 4,
  NASCH_STATUS_IO = 5,
  NASCH_STATUS_PANIC = 6,
} NaschStatus;

// Opaque simulation handle stepping one trajectory.
typedef struct NaschSim NaschSim;

// Experiment description; mirrors the parameter file keys.
typedef struct NaschParams {
  uint64_t road_length;
  uint64_t car_count;
  uint32_t v_max;
  double p;
  uint64_t steps;
  uint64_t seed;
  // One of the `NaschOutputMode` values.
  uint32_t output_mode;
  uint64_t output_stride;
} NaschParams;

typedef struct NaschObservables {
  double mean_velocity;
  double density;
  double flow;
} NaschObservables;

typedef struct NaschRunSummary {
  uint64_t checksum;
  uint64_t draws_consumed;
  struct NaschObservables observables;
} NaschRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nasch_version(void);

// Message for the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *nasch_last_error_message(void);

// Fills `out` with the canonical parameters (1000 cells, 200 cars, p = 0.13,
// v_max = 5) for the given step count and seed.
//
// # Safety
// `out` must be null or point to writable memory for one `NaschParams`.
enum NaschStatus nasch_params_canonical(uint64_t steps, uint64_t seed, struct NaschParams *out);

// Parses parameter-file text. `threads` may be null.
//
// # Safety
// `text` must be a valid NUL-terminated string; `out` must be writable;
// `threads` must be null or writable.
enum NaschStatus nasch_params_parse(const char *text, struct NaschParams *out, uint32_t *threads);

// Runs a whole simulation with `workers` threads.
//
// # Safety
// `params` must be readable and `out` writable.
enum NaschStatus nasch_run(const struct NaschParams *params,
                           uint32_t workers,
                           struct NaschRunSummary *out);

// Runs a simulation and writes the trajectory to `path` in the params'
// output mode. `out` may be null.
//
// # Safety
// `params` must be readable, `path` a valid NUL-terminated string, `out`
// null or writable.
enum NaschStatus nasch_run_to_file(const struct NaschParams *params,
                                   uint32_t workers,
                                   const char *path,
                                   struct NaschRunSummary *out);

// Creates a handle at the initial condition.
//
// # Safety
// `params` must be readable and `out` writable.
enum NaschStatus nasch_sim_new(const struct NaschParams *params, struct NaschSim **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `sim` must be null or a handle from [`nasch_sim_new`] not yet freed.
void nasch_sim_free(struct NaschSim *sim);

// Advances the handle by `steps` steps using `workers` threads (1 selects
// the serial path). The result does not depend on `workers`.
//
// # Safety
// `sim` must be a live handle.
enum NaschStatus nasch_sim_step(struct NaschSim *sim, uint64_t steps, uint32_t workers);

// Steps taken so far.
//
// # Safety
// `sim` must be null or a live handle.
uint64_t nasch_sim_current_step(const struct NaschSim *sim);

// Number of cars; 0 for a null handle.
//
// # Safety
// `sim` must be null or a live handle.
size_t nasch_sim_car_count(const struct NaschSim *sim);

// Copies car positions into `buf`, which must hold at least car-count
// entries.
//
// # Safety
// `sim` must be a live handle and `buf` writable for `len` elements.
enum NaschStatus nasch_sim_positions(const struct NaschSim *sim, uint64_t *buf, size_t len);

// Copies car velocities into `buf`.
//
// # Safety
// `sim` must be a live handle and `buf` writable for `len` elements.
enum NaschStatus nasch_sim_velocities(const struct NaschSim *sim, uint32_t *buf, size_t len);

// # Safety
// `sim` must be a live handle and `out` writable.
enum NaschStatus nasch_sim_observables(const struct NaschSim *sim, struct NaschObservables *out);

// Generator state for `seed` under the default multiplier.
uint64_t nasch_lcg_seed(uint64_t seed);

// State reached from `state` after `k` draws of the default generator.
// `state` is normalized like a seed first (reduced modulo 2^31 - 1, zero
// mapped to 1).
uint64_t nasch_lcg_jump(uint64_t state, uint64_t k);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NASCH_H */
