#ifndef OUTER_BILLIARD_H
#define OUTER_BILLIARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ObStatus {
  OB_STATUS_OK = 0,
  OB_STATUS_NULL_POINTER = 1,
  OB_STATUS_INVALID_ARGUMENT = 2,
  OB_STATUS_INVALID_CURVE = 3,
  OB_STATUS_DYNAMICS_FAILURE = 4,
  OB_STATUS_OPTIMIZER_FAILURE = 5,
  OB_STATUS_PANIC = 6,
} ObStatus;

/**
 * Opaque curve handle.
 */
typedef struct ObCurve ObCurve;

typedef struct ObCurveSample {
  double r;
  double r_prime;
  double r_second;
  double chi;
  double curvature;
} ObCurveSample;

typedef struct ObSDerivatives {
  double s;
  double s1;
  double s2;
  double s11;
  double s12;
  double s22;
  double jac_det;
} ObSDerivatives;

typedef struct ObAngles {
  double phi0;
  double phi1;
} ObAngles;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a curve from its JSON description, e.g. `{"kind":"ellipse","a":2,"b":1}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ObStatus ob_curve_from_json(const char *json, struct ObCurve **out);

/**
 * One of the built-in curves: `circle`, `ellipse` or `fourier`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum ObStatus ob_curve_preset(const char *name, struct ObCurve **out);

/**
 * Releases a curve. Null is ignored.
 *
 * # Safety
 * `curve` must come from this library and not be used afterwards.
 */
void ob_curve_free(struct ObCurve *curve);

/**
 * Radial function, its derivatives and the curvature at angle `phi`.
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable.
 */
enum ObStatus ob_curve_eval(const struct ObCurve *curve, double phi, struct ObCurveSample *out);

/**
 * Image of the exterior point `(x, y)` under the billiard map.
 *
 * # Safety
 * `curve` must be a live handle; `out_x`, `out_y` must be writable.
 */
enum ObStatus ob_map_step(const struct ObCurve *curve,
                          double x,
                          double y,
                          bool clockwise,
                          double *out_x,
                          double *out_y);

/**
 * Preimage of the exterior point `(x, y)`.
 *
 * # Safety
 * As for [`ob_map_step`].
 */
enum ObStatus ob_map_inverse_step(const struct ObCurve *curve,
                                  double x,
                                  double y,
                                  bool clockwise,
                                  double *out_x,
                                  double *out_y);

/**
 * Generating function and derivatives at the chord `(phi, t)`, `t > 0`.
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable.
 */
enum ObStatus ob_s_derivatives(const struct ObCurve *curve,
                               double phi,
                               double t,
                               struct ObSDerivatives *out);

/**
 * Endpoint angles of the chord `(phi, t)`.
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable.
 */
enum ObStatus ob_chord_to_angles(const struct ObCurve *curve,
                                 double phi,
                                 double t,
                                 struct ObAngles *out);

/**
 * Chord `(phi, t)` with endpoint angles `phi0 < phi1 < phi0 + pi`.
 *
 * # Safety
 * `curve` must be a live handle; `out_phi`, `out_t` must be writable.
 */
enum ObStatus ob_angles_to_chord(const struct ObCurve *curve,
                                 double phi0,
                                 double phi1,
                                 double *out_phi,
                                 double *out_t);

/**
 * `int sqrt(chi)/r dphi` about the curve's current origin.
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable.
 */
enum ObStatus ob_q_integral(const struct ObCurve *curve, uint32_t nodes, double *out);

/**
 * First iteration at which the radial variation at `(x, y)` turns radial
 * again; `*out_n` is `-1` when none occurs within `n_max` steps.
 *
 * # Safety
 * `curve` must be a live handle; `out_n` must be writable.
 */
enum ObStatus ob_conjugate_index(const struct ObCurve *curve,
                                 double x,
                                 double y,
                                 uint32_t n_max,
                                 int64_t *out_n);

/**
 * Full rigidity report as JSON. Pass `0` for either setting to use the default.
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable. Free the string
 * with [`ob_string_free`].
 */
enum ObStatus ob_rigidity_report_json(const struct ObCurve *curve,
                                      uint32_t phi_grid,
                                      double t_max,
                                      char **out);

/**
 * Message of the last failure on this thread, or null. Free with [`ob_string_free`].
 */
char *ob_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ob_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *ob_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OUTER_BILLIARD_H */
