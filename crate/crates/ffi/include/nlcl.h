#ifndef NLCL_H
#define NLCL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NlclStatus {
  NLCL_STATUS_OK = 0,
  NLCL_STATUS_INVALID_ARGUMENT = 1,
  NLCL_STATUS_CONFIG = 2,
  NLCL_STATUS_BLOWUP = 3,
  NLCL_STATUS_IO = 4,
  NLCL_STATUS_PANIC = 5,
} NlclStatus;

/**
 * Opaque simulation handle.
 */
typedef struct NlclSimulation NlclSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *nlcl_last_error_message(void);

/**
 * Builds a simulation from scenario text (the `.cfg` format) at its initial
 * datum.
 *
 * # Safety
 * `config_text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NlclStatus nlcl_simulation_new(const char *config_text, struct NlclSimulation **out);

/**
 * # Safety
 * `sim` must come from `nlcl_simulation_new` and not be used afterwards.
 * NULL is ignored.
 */
void nlcl_simulation_free(struct NlclSimulation *sim);

/**
 * Takes one step (fixed or CFL-limited); writes its length to `dt_taken`
 * when non-NULL.
 *
 * # Safety
 * `sim` must be a live handle; `dt_taken` NULL or valid.
 */
enum NlclStatus nlcl_simulation_step(struct NlclSimulation *sim, double *dt_taken);

/**
 * Steps until the simulation time reaches `t_target`; the last step is
 * shortened to land on it.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum NlclStatus nlcl_simulation_run(struct NlclSimulation *sim, double t_target);

/**
 * # Safety
 * `sim` must be a live handle and `t` valid.
 */
enum NlclStatus nlcl_simulation_time(const struct NlclSimulation *sim, double *t);

/**
 * Grid size and component count.
 *
 * # Safety
 * `sim` must be a live handle; outputs valid pointers.
 */
enum NlclStatus nlcl_simulation_dims(const struct NlclSimulation *sim,
                                     size_t *nx,
                                     size_t *ny,
                                     size_t *components);

/**
 * Copies component `c` (row-major, `x1` fastest) into `buf` of length `len`,
 * which must equal `nx * ny`.
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` doubles.
 */
enum NlclStatus nlcl_simulation_copy_component(const struct NlclSimulation *sim,
                                               size_t component,
                                               double *buf,
                                               size_t len);

/**
 * Integral of component `c` over the grid.
 *
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum NlclStatus nlcl_simulation_integrate(const struct NlclSimulation *sim,
                                          size_t component,
                                          double *out);

/**
 * Largest FFT-versus-direct deviation (value or gradient) on an `n x n`
 * random field.
 *
 * # Safety
 * `out` must be valid.
 */
enum NlclStatus nlcl_oracle_deviation(size_t n, uint64_t seed, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLCL_H */
