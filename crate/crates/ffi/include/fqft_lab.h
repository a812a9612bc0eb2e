#ifndef FQFT_LAB_H
#define FQFT_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FqftStatus {
  FQFT_STATUS_OK = 0,
  FQFT_STATUS_NULL_POINTER = 1,
  FQFT_STATUS_INVALID_ARGUMENT = 2,
  FQFT_STATUS_NOT_CONVERGED = 3,
  FQFT_STATUS_NUMERICAL = 4,
  FQFT_STATUS_SCENE = 5,
  FQFT_STATUS_PANIC = 6,
} FqftStatus;

/**
 * Opaque amplitude handle. Release with [`fqft_amplitude_free`].
 */
typedef struct FqftAmplitude FqftAmplitude;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the library.
 */
const char *fqft_last_error_message(void);

/**
 * ln det of the circle Laplacian plus mass², twisted by `twist` radians.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum FqftStatus fqft_logdet_circle(double circumference, double mass, double twist, double *out);

/**
 * ln det on a cylinder of the given length with Dirichlet ends.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum FqftStatus fqft_logdet_cylinder(double circumference,
                                     double mass,
                                     double twist,
                                     double length,
                                     double *out);

/**
 * ln det on the torus obtained by closing a cylinder of the given length.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum FqftStatus fqft_logdet_torus(double circumference,
                                  double mass,
                                  double twist,
                                  double length,
                                  double *out);

/**
 * ln det of the summed Dirichlet-to-Neumann operator on the seam between
 * cylinders of lengths `length1` and `length2`.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum FqftStatus fqft_logdet_dtn(double circumference,
                                double mass,
                                double twist,
                                double length1,
                                double length2,
                                double *out);

/**
 * Amplitude of a cylinder. `angles` lists holonomy eigen-angles, one per real
 * dimension; pass null and 0 for the trivial line bundle.
 *
 * # Safety
 * `angles` must be null or point to `n_angles` doubles; `out` must be valid for a write.
 */
enum FqftStatus fqft_amplitude_cylinder(double circumference,
                                        const double *angles,
                                        size_t n_angles,
                                        double length,
                                        double mass,
                                        size_t k_max,
                                        bool projective,
                                        struct FqftAmplitude **out);

/**
 * Glues the outgoing circle of `first` to the incoming circle of `second`.
 *
 * # Safety
 * Handles must be null or live; `out` must be valid for a write.
 */
enum FqftStatus fqft_amplitude_compose(const struct FqftAmplitude *second,
                                       const struct FqftAmplitude *first,
                                       struct FqftAmplitude **out);

/**
 * # Safety
 * `a` must be null or live; `out` must be valid for a write.
 */
enum FqftStatus fqft_amplitude_log_prefactor(const struct FqftAmplitude *a, double *out);

/**
 * ln of the trace, i.e. the torus partition function for cylinder amplitudes.
 *
 * # Safety
 * `a` must be null or live; `out` must be valid for a write.
 */
enum FqftStatus fqft_amplitude_log_trace(const struct FqftAmplitude *a, double *out);

/**
 * # Safety
 * `a` must be null or a handle not yet freed.
 */
void fqft_amplitude_free(struct FqftAmplitude *a);

/**
 * Runs the functoriality checks on a scene given as JSON text and returns the
 * report as JSON. Release the string with [`fqft_string_free`].
 *
 * # Safety
 * `scene_json` must be null or a nul-terminated string; outputs must be valid for writes.
 */
enum FqftStatus fqft_verify_scene(const char *scene_json,
                                  bool projective,
                                  bool *passed,
                                  char **report_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void fqft_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FQFT_LAB_H */
