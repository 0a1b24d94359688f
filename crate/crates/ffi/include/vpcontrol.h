#ifndef VPCONTROL_H
#define VPCONTROL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum VpStatus {
  VP_STATUS_OK = 0,
  VP_STATUS_NULL_POINTER = 1,
  VP_STATUS_INVALID_ARGUMENT = 2,
  VP_STATUS_ALIASING = 3,
  VP_STATUS_LENGTH_MISMATCH = 4,
  VP_STATUS_DOMAIN = 5,
  VP_STATUS_NO_UNSTABLE_ROOT = 6,
  VP_STATUS_RUN_FAILED = 7,
  VP_STATUS_GRADIENT_FAILURE = 8,
  VP_STATUS_LINE_SEARCH = 9,
  VP_STATUS_LANDSCAPE = 10,
  VP_STATUS_FORMAT = 11,
  VP_STATUS_IO = 12,
  VP_STATUS_NOT_RUN = 13,
  VP_STATUS_PANIC = 14,
} VpStatus;

/**
 * A static control field `H(x) = Σ a_k cos(k k₀ x) + b_k sin(k k₀ x)`.
 */
typedef struct VpControlField VpControlField;

/**
 * A configured simulation and, once run, its trace.
 */
typedef struct VpSimulation VpSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *vp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vp_version(void);

/**
 * Creates a simulation from a preset name (`"two-stream"` or
 * `"bump-on-tail"`) with the preset grid, time step and horizon.
 *
 * # Safety
 * `preset` must be a valid NUL-terminated string and `out` a valid pointer
 * to writable storage for one handle.
 */
enum VpStatus vp_simulation_new(const char *preset, struct VpSimulation **out);

/**
 * Releases a simulation. NULL is ignored.
 *
 * # Safety
 * `sim` must be NULL or a handle from [`vp_simulation_new`] not yet freed.
 */
void vp_simulation_free(struct VpSimulation *sim);

/**
 * Overrides grid resolution, time step, final time and perturbation
 * amplitude. Clears any previous trace.
 *
 * # Safety
 * `sim` must be a live simulation handle.
 */
enum VpStatus vp_simulation_configure(struct VpSimulation *sim,
                                      size_t mx,
                                      size_t mv,
                                      double dt,
                                      double final_time,
                                      double epsilon);

/**
 * Sets the control field from `n` cosine and `n` sine coefficients
 * (`n = 0` removes it). Clears any previous trace.
 *
 * # Safety
 * `sim` must be a live handle; `a` and `b` must each point to `n` readable
 * doubles (they may be NULL when `n == 0`).
 */
enum VpStatus vp_simulation_set_control(struct VpSimulation *sim,
                                        const double *a,
                                        const double *b,
                                        size_t n);

/**
 * Applies a control field handle to the simulation.
 *
 * # Safety
 * Both handles must be live.
 */
enum VpStatus vp_simulation_apply_control(struct VpSimulation *sim,
                                          const struct VpControlField *field);

/**
 * Runs the solver, keeping the trace in the handle.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum VpStatus vp_simulation_run(struct VpSimulation *sim);

/**
 * Number of entries in the energy series (`n_steps + 1`), 0 before a run.
 *
 * # Safety
 * `sim` must be NULL or a live handle.
 */
size_t vp_simulation_energy_len(const struct VpSimulation *sim);

/**
 * Copies up to `len` energies into `buf`; `written` receives the count.
 *
 * # Safety
 * `sim` must be a live handle, `buf` must hold `len` writable doubles and
 * `written` must be NULL or writable.
 */
enum VpStatus vp_simulation_energy(const struct VpSimulation *sim,
                                   double *buf,
                                   size_t len,
                                   size_t *written);

/**
 * Evaluates a named objective (`kl`, `ee`, `klt`, `eet`, `l2`, `l2t`) on
 * the stored trace.
 *
 * # Safety
 * `sim` must be a live handle, `kind` a NUL-terminated string and `out`
 * writable.
 */
enum VpStatus vp_simulation_objective(const struct VpSimulation *sim,
                                      const char *kind,
                                      double *out);

/**
 * Runs a fresh simulation for the objective without touching the stored
 * trace; failures yield the sentinel `DBL_MAX` in `out` and a non-OK code.
 *
 * # Safety
 * As [`vp_simulation_objective`].
 */
enum VpStatus vp_simulation_evaluate(const struct VpSimulation *sim, const char *kind, double *out);

/**
 * Synthesizes the analytic control for the simulation's equilibrium and
 * perturbation. `converged` selects the fully converged Laplace horizon.
 * On success `root_re`/`root_im` (either may be NULL) receive the root.
 *
 * # Safety
 * `sim` must be a live handle, `out` writable, and the root pointers NULL
 * or writable.
 */
enum VpStatus vp_guess(const struct VpSimulation *sim,
                       bool converged,
                       struct VpControlField **out,
                       double *root_re,
                       double *root_im);

/**
 * Number of Fourier modes N of a control field (0 for NULL).
 *
 * # Safety
 * `field` must be NULL or a live handle.
 */
size_t vp_control_field_order(const struct VpControlField *field);

/**
 * Copies the coefficients into `a` and `b`, each holding `n >= N` doubles.
 *
 * # Safety
 * `field` must be a live handle; `a` and `b` must hold `n` writable doubles.
 */
enum VpStatus vp_control_field_coefficients(const struct VpControlField *field,
                                            double *a,
                                            double *b,
                                            size_t n);

/**
 * Evaluates `H(x)`; NaN for a NULL handle.
 *
 * # Safety
 * `field` must be NULL or a live handle.
 */
double vp_control_field_eval(const struct VpControlField *field, double x);

/**
 * Releases a control field. NULL is ignored.
 *
 * # Safety
 * `field` must be NULL or a handle from [`vp_guess`] not yet freed.
 */
void vp_control_field_free(struct VpControlField *field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VPCONTROL_H */
