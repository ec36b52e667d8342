#ifndef VPDETECT_H
#define VPDETECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VpdStatus {
  VPD_STATUS_OK = 0,
  VPD_STATUS_NULL_POINTER = 1,
  VPD_STATUS_INVALID_ARGUMENT = 2,
  VPD_STATUS_INVALID_PARAMETER = 3,
  VPD_STATUS_CONFIG = 4,
  VPD_STATUS_NUMERICAL = 5,
  VPD_STATUS_NOT_CONVERGED = 6,
  VPD_STATUS_CONTRACT_VIOLATION = 7,
  VPD_STATUS_BUFFER_TOO_SMALL = 8,
  VPD_STATUS_IO = 9,
  VPD_STATUS_PANIC = 10,
} VpdStatus;

/**
 * Opaque result of one cycle.
 */
typedef struct VpdCycle VpdCycle;

/**
 * Opaque protocol scenario.
 */
typedef struct VpdScenario VpdScenario;

typedef struct VpdCycleScalars {
  double photons_total;
  double photons_thermal;
  double vp_pairs_detected;
  double j_total;
  double j_thermal;
  double j_extra;
  double kappa_mean;
  double n_thermal;
  double t_m;
  /**
   * NaN when the meter is always on.
   */
  double p2_at_switch;
  double final_populations[4];
  /**
   * 1 for a single cycle, otherwise the limiting-cycle iteration count.
   */
  uint32_t iterations;
} VpdCycleScalars;

typedef struct VpdRabiGroundState {
  /**
   * In units of the mode frequency.
   */
  double energy_e0;
  double gap;
  double overlap0_sq;
  double overlap2_sq;
  double mean_photons;
} VpdRabiGroundState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *vpd_last_error(void);

/**
 * Scenario of a named preset (`fig1b`, `fig2a`, `fig2b`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum VpdStatus vpd_scenario_preset(const char *name, struct VpdScenario **out);

/**
 * Scenario from a TOML configuration document.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum VpdStatus vpd_scenario_from_toml(const char *text, struct VpdScenario **out);

/**
 * Sets one numeric parameter by name (the sweep axis names).
 *
 * # Safety
 * `scenario` must come from this library; `axis` must be NUL-terminated.
 */
enum VpdStatus vpd_scenario_set(struct VpdScenario *scenario, const char *axis, double value);

/**
 * # Safety
 * `scenario` must come from this library or be null.
 */
void vpd_scenario_free(struct VpdScenario *scenario);

/**
 * # Safety
 * `scenario` must come from this library and `out` be a valid pointer.
 */
enum VpdStatus vpd_run_cycle(const struct VpdScenario *scenario, struct VpdCycle **out);

/**
 * Iterates cycles until the state returns to itself within `tol`.
 *
 * # Safety
 * `scenario` must come from this library and `out` be a valid pointer.
 */
enum VpdStatus vpd_limiting_cycle(const struct VpdScenario *scenario,
                                  double tol,
                                  uint32_t max_iter,
                                  struct VpdCycle **out);

/**
 * # Safety
 * `cycle` must come from this library or be null.
 */
void vpd_cycle_free(struct VpdCycle *cycle);

/**
 * # Safety
 * `cycle` must come from this library and `out` be a valid pointer.
 */
enum VpdStatus vpd_cycle_scalars(const struct VpdCycle *cycle, struct VpdCycleScalars *out);

/**
 * Number of samples in the trajectory, 0 for a null handle.
 *
 * # Safety
 * `cycle` must come from this library or be null.
 */
size_t vpd_cycle_len(const struct VpdCycle *cycle);

/**
 * Copies a trajectory column (`t`, `P0`, `P1`, `P2`, `PPhi`, `n_exp`,
 * `photons_cum`, `vp_conv`, `omega_s`, `omega_p`, `kappa`) into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles; `name` must be NUL-terminated.
 */
enum VpdStatus vpd_cycle_column(const struct VpdCycle *cycle,
                                const char *name,
                                double *buf,
                                size_t len);

/**
 * Ground state of the two-level quantum Rabi model with `n_fock` photon states.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum VpdStatus vpd_rabi_ground_state(double epsilon,
                                     double g,
                                     uint32_t n_fock,
                                     struct VpdRabiGroundState *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VPDETECT_H */
