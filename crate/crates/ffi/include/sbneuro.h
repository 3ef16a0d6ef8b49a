#ifndef SBNEURO_H
#define SBNEURO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SB_STATUS_NULL_POINTER = 1,
  /**
   * Bad argument, configuration or JSON document.
   */
  SB_STATUS_INVALID_INPUT = 2,
  /**
   * Solver or integrator failure.
   */
  SB_STATUS_NUMERICAL = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  SB_STATUS_INTERNAL = 4,
} SbStatus;

/**
 * Device parameter set.
 */
typedef struct SbDeviceParams SbDeviceParams;

/**
 * Capacitor neuron configuration.
 */
typedef struct SbNeuronConfig SbNeuronConfig;

/**
 * Calibrated gate-voltage to current map.
 */
typedef struct SbVccsModel SbVccsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sb_version(void);

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread; empty if nothing failed yet.
 */
const char *sb_last_error(void);

/**
 * Default device parameters.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SbStatus sb_device_params_default(struct SbDeviceParams **out);

/**
 * Parses a device parameter JSON document.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` null or writable.
 */
enum SbStatus sb_device_params_from_json(const char *json, struct SbDeviceParams **out);

/**
 * # Safety
 * `p` must be null or a handle from this library, not yet freed.
 */
void sb_device_params_free(struct SbDeviceParams *p);

/**
 * Drain current in amperes at one bias point.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum SbStatus sb_drain_current(const struct SbDeviceParams *p,
                               double v_tg,
                               double v_bg,
                               double v_ds,
                               double *out);

/**
 * Effective source barrier height in volts.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum SbStatus sb_effective_barrier(const struct SbDeviceParams *p,
                                   double v_tg,
                                   double v_bg,
                                   double v_ds,
                                   double *out);

/**
 * Drain currents for `n` top-gate voltages into `i_out[0..n]`.
 *
 * # Safety
 * `v_tg` must be readable and `i_out` writable for `n` doubles.
 */
enum SbStatus sb_transfer_curve(const struct SbDeviceParams *p,
                                const double *v_tg,
                                size_t n,
                                double v_bg,
                                double v_ds,
                                double *i_out);

/**
 * Fits a VCCS map to a simulated transfer curve of `p` sampled at
 * `n_samples` points on `[v_lo, v_hi]`.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum SbStatus sb_vccs_calibrate(const struct SbDeviceParams *p,
                                double v_lo,
                                double v_hi,
                                size_t n_samples,
                                double v_bg,
                                double v_ds,
                                size_t n_knots,
                                struct SbVccsModel **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable.
 */
enum SbStatus sb_vccs_from_json(const char *json, struct SbVccsModel **out);

/**
 * Current of the map at `v_tg`, amperes.
 *
 * # Safety
 * `m` must be a live handle; `out` writable.
 */
enum SbStatus sb_vccs_eval(const struct SbVccsModel *m, double v_tg, double *out);

/**
 * # Safety
 * `m` must be null or a handle from this library, not yet freed.
 */
void sb_vccs_free(struct SbVccsModel *m);

/**
 * Parses a neuron configuration. `base_dir` (may be null) resolves a
 * relative `params_path`; null means the working directory.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` writable.
 */
enum SbStatus sb_neuron_from_json(const char *json,
                                  const char *base_dir,
                                  struct SbNeuronConfig **out);

/**
 * # Safety
 * `c` must be null or a handle from this library, not yet freed.
 */
void sb_neuron_free(struct SbNeuronConfig *c);

/**
 * Steady-state firing frequency at `v_tg`. `dt <= 0` picks the step
 * automatically. `timed_out` may be null.
 *
 * # Safety
 * `c` must be a live handle; `f_hz` writable; `timed_out` null or writable.
 */
enum SbStatus sb_neuron_measure_frequency(const struct SbNeuronConfig *c,
                                          double v_tg,
                                          double dt,
                                          double *f_hz,
                                          bool *timed_out);

/**
 * Closed-form frequency of the neuron driven by a constant current.
 *
 * # Safety
 * `c` must be a live handle; `out` writable.
 */
enum SbStatus sb_ideal_frequency(const struct SbNeuronConfig *c, double i_const, double *out);

/**
 * Parasitic capacitance implied by the measured small/large capacitor
 * frequency ratio, farads.
 *
 * # Safety
 * `out` must be writable.
 */
enum SbStatus sb_fit_parasitic(double f_ratio, double c_small, double c_large, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SBNEURO_H */
