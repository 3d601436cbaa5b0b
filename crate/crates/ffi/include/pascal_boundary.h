#ifndef PASCAL_BOUNDARY_H
#define PASCAL_BOUNDARY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C interface.
 */
typedef enum PbStatus {
  PB_STATUS_OK = 0,
  PB_STATUS_NULL_ARGUMENT = 1,
  PB_STATUS_INVALID_UTF8 = 2,
  PB_STATUS_PARSE = 3,
  PB_STATUS_INVALID_PARAMETER = 4,
  PB_STATUS_IO = 5,
  PB_STATUS_NON_CONVERGENCE = 6,
  PB_STATUS_OUT_OF_RANGE = 7,
  PB_STATUS_PANIC = 8,
} PbStatus;

/**
 * A weighted Pascal graph.
 */
typedef struct PbGraph PbGraph;

/**
 * A probability function on a finite triangle.
 */
typedef struct PbPhi PbPhi;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the last error message on this thread, or NULL if there was none.
 * Free with `pb_string_free`.
 */
char *pb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pb_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library that has not been freed.
 */
void pb_string_free(char *s);

/**
 * Builds a graph from a family spec such as `"qpascal;q=1/2"` or
 * `"gstirling;a=linear:1,1;b=const:0"`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum PbStatus pb_graph_new(const char *spec, struct PbGraph **out);

/**
 * # Safety
 * `g` must be NULL or a handle from `pb_graph_new` that has not been freed.
 */
void pb_graph_free(struct PbGraph *g);

/**
 * `d(h,t)` as text: `p/q` in exact mode, a decimal in float mode.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum PbStatus pb_graph_dimension(const struct PbGraph *g, uintptr_t h, uintptr_t t, char **out);

/**
 * `d(h,t)` rounded to a double.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum PbStatus pb_graph_dimension_f64(const struct PbGraph *g,
                                     uintptr_t h,
                                     uintptr_t t,
                                     double *out);

/**
 * `φ` of a catalog measure such as `"polya;a=1;b=1"` on `h + t ≤ horizon`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum PbStatus pb_phi_new(const char *spec, uintptr_t horizon, struct PbPhi **out);

/**
 * # Safety
 * `p` must be NULL or a handle from `pb_phi_new` that has not been freed.
 */
void pb_phi_free(struct PbPhi *p);

/**
 * Horizon of the triangle, or 0 for a NULL handle.
 *
 * # Safety
 * `p` must be NULL or a live handle.
 */
uintptr_t pb_phi_horizon(const struct PbPhi *p);

/**
 * `φ(h,t)` as text.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum PbStatus pb_phi_value(const struct PbPhi *p, uintptr_t h, uintptr_t t, char **out);

/**
 * `φ(h,t)` rounded to a double.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum PbStatus pb_phi_value_f64(const struct PbPhi *p, uintptr_t h, uintptr_t t, double *out);

/**
 * Boundary report of a graph family as JSON.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out_json` must be writable.
 */
enum PbStatus pb_boundary_report_json(const char *spec, uintptr_t max_extremes, char **out_json);

/**
 * Runs a simulation job given as JSON and returns the result as JSON.
 *
 * # Safety
 * `job_json` must be a NUL-terminated string; `out_json` must be writable.
 */
enum PbStatus pb_simulate_json(const char *job_json, char **out_json);

/**
 * Runs the built-in oracle suites; `*all_passed` is 1 if every suite passed.
 *
 * # Safety
 * `all_passed` must be writable.
 */
enum PbStatus pb_self_check(int *all_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PASCAL_BOUNDARY_H */
