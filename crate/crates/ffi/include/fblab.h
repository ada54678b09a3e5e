#ifndef FBLAB_H
#define FBLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum FblabStatus {
  FBLAB_STATUS_OK = 0,
  FBLAB_STATUS_NULL_POINTER = 1,
  FBLAB_STATUS_INVALID_ARGUMENT = 2,
  FBLAB_STATUS_OUT_OF_RANGE = 3,
  FBLAB_STATUS_SOLVER_FAILURE = 4,
  FBLAB_STATUS_HYPOTHESIS_VIOLATED = 5,
  FBLAB_STATUS_CONFIG = 6,
  FBLAB_STATUS_IO = 7,
  FBLAB_STATUS_PANIC = 8,
} FblabStatus;

/**
 * Boundary point class returned by [`fblab_field_classify`].
 */
typedef enum FblabPointClass {
  FBLAB_POINT_CLASS_Z1 = 1,
  FBLAB_POINT_CLASS_Z2 = 2,
  FBLAB_POINT_CLASS_SINGULAR = 3,
  FBLAB_POINT_CLASS_UNKNOWN = 0,
} FblabPointClass;

/**
 * A solved partition.
 */
typedef struct FblabField FblabField;

/**
 * Certified epiperimetric constants in dimension two.
 */
typedef struct FblabConstants {
  double q2_squared;
  double delta2;
  double eps_bd;
  double eps_int;
} FblabConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after a success). Valid until the next call.
 */
const char *fblab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fblab_version(void);

/**
 * Solve for the optimal `n`-partition of the disk of `radius` on a grid of spacing `h`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to release with [`fblab_field_free`].
 */
enum FblabStatus fblab_solve_disk(double radius,
                                  double h,
                                  uint32_t n,
                                  uint64_t seed,
                                  struct FblabField **out);

/**
 * Release a handle; null is ignored.
 *
 * # Safety
 * `field` must be null or a handle from this library not yet freed.
 */
void fblab_field_free(struct FblabField *field);

/**
 * # Safety
 * `field` must be a live handle and `out` a valid pointer.
 */
enum FblabStatus fblab_field_components(const struct FblabField *field, uintptr_t *out);

/**
 * Eigenvalue of component `i`.
 *
 * # Safety
 * `field` must be a live handle and `out` a valid pointer.
 */
enum FblabStatus fblab_field_eigenvalue(const struct FblabField *field, uintptr_t i, double *out);

/**
 * # Safety
 * `field` must be a live handle and `out` a valid pointer.
 */
enum FblabStatus fblab_field_eigenvalue_sum(const struct FblabField *field, double *out);

/**
 * Interpolated value of component `i` at `(x, y)`; zero outside the domain.
 *
 * # Safety
 * `field` must be a live handle and `out` a valid pointer.
 */
enum FblabStatus fblab_field_sample(const struct FblabField *field,
                                    uintptr_t i,
                                    double x,
                                    double y,
                                    double *out);

/**
 * Lipschitz estimate of the solved field.
 *
 * # Safety
 * `field` must be a live handle and `out` a valid pointer.
 */
enum FblabStatus fblab_field_lipschitz(const struct FblabField *field, double *out);

/**
 * Frequency at the boundary point nearest `(x, y)` and its classification.
 *
 * # Safety
 * `field` must be a live handle; `gamma` and `class` must be valid pointers.
 */
enum FblabStatus fblab_field_classify(const struct FblabField *field,
                                      double x,
                                      double y,
                                      double *gamma,
                                      enum FblabPointClass *class_);

/**
 * Write the partition map with the interface overlay as SVG.
 *
 * # Safety
 * `field` must be a live handle and `path` a NUL-terminated UTF-8 string.
 */
enum FblabStatus fblab_field_write_svg(const struct FblabField *field, const char *path);

/**
 * Run a configuration file; `passed` receives 1 when every check passes, else 0.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `passed` a valid pointer.
 */
enum FblabStatus fblab_run_config(const char *path, int32_t *passed);

/**
 * Certified epiperimetric constants in d = 2.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FblabStatus fblab_constants(struct FblabConstants *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBLAB_H */
