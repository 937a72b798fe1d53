#ifndef DOLPHIN_TAIL_H
#define DOLPHIN_TAIL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DtStatus {
  DT_STATUS_OK = 0,
  DT_STATUS_NULL_POINTER = 1,
  DT_STATUS_INVALID_INPUT = 2,
  DT_STATUS_COMPUTATION_FAILED = 3,
  DT_STATUS_BUFFER_TOO_SMALL = 4,
  DT_STATUS_PANIC = 5,
} DtStatus;

/**
 * Fitted upper and lower body contours.
 */
typedef struct DtCurves DtCurves;

/**
 * A generated or parsed skeleton graph.
 */
typedef struct DtSkeleton DtSkeleton;

/**
 * Swim outcome. `cot` is NaN when the tail produces no forward speed.
 */
typedef struct DtSwimResult {
  double speed_m_s;
  double speed_bl_s;
  double power_w;
  double mass_kg;
  double cot;
  double body_length_m;
} DtSwimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dt_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void dt_string_free(char *s);

/**
 * Default fit of the bundled reference profile.
 */
struct DtCurves *dt_curves_reference(void);

/**
 * Fits a profile CSV with the default dorsal excision.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum DtStatus dt_curves_fit(const char *path, uint32_t degree, struct DtCurves **out);

/**
 * Mean squared residuals of the upper and lower fits, m^2.
 *
 * # Safety
 * `curves` must be a live handle; the outputs must be valid pointers.
 */
enum DtStatus dt_curves_mse(const struct DtCurves *curves, double *mse_upper, double *mse_lower);

/**
 * # Safety
 * `curves` must be null or a handle from this library, not yet freed.
 */
void dt_curves_free(struct DtCurves *curves);

/**
 * Skeleton for a preset label (`type1` .. `type6`).
 *
 * # Safety
 * `curves` must be a live handle, `label` a NUL-terminated string and `out`
 * a valid pointer.
 */
enum DtStatus dt_skeleton_preset(const struct DtCurves *curves,
                                 const char *label,
                                 struct DtSkeleton **out);

/**
 * Skeleton with explicit height ratio, thickness ratio and rib count; other
 * parameters take their defaults.
 *
 * # Safety
 * `curves` must be a live handle and `out` a valid pointer.
 */
enum DtStatus dt_skeleton_new(const struct DtCurves *curves,
                              double h1,
                              double h2,
                              double thickness_ratio,
                              uint32_t n_ribs,
                              struct DtSkeleton **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DtStatus dt_skeleton_from_json(const char *json, struct DtSkeleton **out);

/**
 * Skeleton JSON; free with [`dt_string_free`]. Null if `skeleton` is null.
 *
 * # Safety
 * `skeleton` must be null or a live handle.
 */
char *dt_skeleton_to_json(const struct DtSkeleton *skeleton);

/**
 * SVG drawing in millimetres; free with [`dt_string_free`]. Null on failure.
 *
 * # Safety
 * `skeleton` must be null or a live handle.
 */
char *dt_skeleton_to_svg(const struct DtSkeleton *skeleton);

/**
 * Number of ribs, or 0 for a null handle.
 *
 * # Safety
 * `skeleton` must be null or a live handle.
 */
size_t dt_skeleton_rib_count(const struct DtSkeleton *skeleton);

/**
 * # Safety
 * `skeleton` must be null or a handle from this library, not yet freed.
 */
void dt_skeleton_free(struct DtSkeleton *skeleton);

/**
 * Solves the bent pose for cable displacements (metres, positive pulls).
 *
 * Writes the joint angles to `angles` and their count to `n_angles`. When
 * `capacity` is too small nothing is written except `n_angles`, and
 * [`DtStatus::BufferTooSmall`] is returned.
 *
 * # Safety
 * `skeleton` must be a live handle, `angles` must hold `capacity` doubles
 * and `n_angles` must be a valid pointer.
 */
enum DtStatus dt_bend(const struct DtSkeleton *skeleton,
                      double delta_top,
                      double delta_bottom,
                      double *angles,
                      size_t capacity,
                      size_t *n_angles);

/**
 * Steady swimming under the default hydrodynamic and power models. With
 * `calibrate_speed > 0`, drag is first tuned so this skeleton swims at that
 * speed.
 *
 * # Safety
 * `skeleton` must be a live handle and `out` a valid pointer.
 */
enum DtStatus dt_swim(const struct DtSkeleton *skeleton,
                      double amplitude,
                      double frequency,
                      double calibrate_speed,
                      struct DtSwimResult *out);

/**
 * Cost of transport P / (m v).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DtStatus dt_cot(double power, double mass, double speed, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum DtStatus dt_speed_bl(double speed, double body_length, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum DtStatus dt_runtime_hours(double battery_wh, double power_w, double *out);

/**
 * Marks the speed/COT non-dominated points: `mask[i]` is 1 on the front,
 * 0 otherwise. NaN COT excludes a point.
 *
 * # Safety
 * `speeds`, `cots` and `mask` must each hold `n` elements.
 */
enum DtStatus dt_pareto_mask(const double *speeds, const double *cots, size_t n, uint8_t *mask);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOLPHIN_TAIL_H */
