#ifndef OLIM_H
#define OLIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum OlimStatus {
  OLIM_STATUS_OK = 0,
  OLIM_STATUS_NULL_POINTER = 1,
  OLIM_STATUS_INVALID_ARGUMENT = 2,
  OLIM_STATUS_IO = 3,
  OLIM_STATUS_SOLVE = 4,
  OLIM_STATUS_PANIC = 5,
} OlimStatus;

/**
 * Slowness samples on a uniform grid.
 */
typedef struct OlimGrid OlimGrid;

/**
 * Solved U field with its statistics.
 */
typedef struct OlimSolution OlimSolution;

/**
 * Solver counters of one solve.
 */
typedef struct OlimStats {
  uint64_t line_attempted;
  uint64_t tri_attempted;
  uint64_t tet_attempted;
  uint64_t skipped_visibility;
  uint64_t skipped_constrained;
  uint64_t skipped_kkt;
  uint64_t no_characteristic;
  uint64_t heap_ops;
  uint64_t accepted;
  double max_monotone_violation;
} OlimStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call into the library on the
 * same thread.
 */
const char *olim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *olim_version(void);

/**
 * Creates a grid of `dim` (2 or 3) axes from `len` row-major slowness
 * samples.
 *
 * # Safety
 * `shape` and `origin` must point to `dim` values, `s` to `len` values and
 * `out` to writable storage for one pointer.
 */
enum OlimStatus olim_grid_new(size_t dim,
                              const size_t *shape,
                              double h,
                              const double *origin,
                              const double *s,
                              size_t len,
                              struct OlimGrid **out);

/**
 * Reads a raw f64 slowness file with its `<path>.json` sidecar.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum OlimStatus olim_grid_read(const char *path, struct OlimGrid **out);

/**
 * Releases a grid. Null is ignored.
 *
 * # Safety
 * `grid` must come from this library and not be used afterwards.
 */
void olim_grid_free(struct OlimGrid *grid);

/**
 * Number of nodes of the grid, or 0 for null.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
size_t olim_grid_num_nodes(const struct OlimGrid *grid);

/**
 * Linear index of the node nearest to `coord` (`dim` values).
 *
 * # Safety
 * `grid` must be live, `coord` must point to `dim` values and `node` be
 * writable.
 */
enum OlimStatus olim_grid_nearest_node(const struct OlimGrid *grid,
                                       const double *coord,
                                       size_t *node);

/**
 * Solves on `grid` with `n_boundary` boundary nodes and values.
 *
 * `stencil` is one of `olim4`, `olim8`, `olim6`, `olim18`, `olim26`,
 * `olim3d`; `rule` one of `rhr`, `mp0`, `mp1`. A nonnegative
 * `factor_radius` factors around every boundary node using the grid
 * slowness there; pass a negative value to solve unfactored.
 *
 * # Safety
 * `grid` must be live, the strings NUL-terminated, `nodes` and `values`
 * must point to `n_boundary` entries and `out` be writable.
 */
enum OlimStatus olim_solve(const struct OlimGrid *grid,
                           const char *stencil,
                           const char *rule,
                           const size_t *nodes,
                           const double *values,
                           size_t n_boundary,
                           double factor_radius,
                           struct OlimSolution **out);

/**
 * Releases a solution. Null is ignored.
 *
 * # Safety
 * `sol` must come from this library and not be used afterwards.
 */
void olim_solution_free(struct OlimSolution *sol);

/**
 * Number of values in the solution, or 0 for null.
 *
 * # Safety
 * `sol` must be null or a live solution handle.
 */
size_t olim_solution_len(const struct OlimSolution *sol);

/**
 * Copies the U field into `out`, which must hold exactly
 * `olim_solution_len(sol)` values.
 *
 * # Safety
 * `sol` must be live and `out` must point to `len` writable values.
 */
enum OlimStatus olim_solution_values(const struct OlimSolution *sol, double *out, size_t len);

/**
 * Copies the solver counters into `out`.
 *
 * # Safety
 * `sol` must be live and `out` writable.
 */
enum OlimStatus olim_solution_stats(const struct OlimSolution *sol, struct OlimStats *out);

/**
 * Writes the U field as a raw f64 file plus `<path>.json` sidecar.
 *
 * # Safety
 * `sol` must be live and `path` NUL-terminated.
 */
enum OlimStatus olim_solution_write(const struct OlimSolution *sol, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OLIM_H */
