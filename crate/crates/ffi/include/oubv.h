#ifndef OUBV_H
#define OUBV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum OubvStatus {
  OubvStatus_Ok = 0,
  OubvStatus_NullPointer = 1,
  OubvStatus_InvalidArgument = 2,
  OubvStatus_NumericalError = 3,
  OubvStatus_IoError = 4,
  OubvStatus_Utf8Error = 5,
} OubvStatus;

typedef struct OubvBody OubvBody;

typedef struct OubvField OubvField;

typedef struct OubvGrid OubvGrid;

typedef struct OubvOperator OubvOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Most recent error message on this thread, or null if none was recorded.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *oubv_last_error_message(void);

/**
 * Builds the grid on [-half_width, half_width]^dim with the given spacing.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum OubvStatus oubv_grid_new(uintptr_t dim,
                              double half_width,
                              double spacing,
                              struct OubvGrid **out);

/**
 * # Safety
 * `grid` must be a live handle from `oubv_grid_new` or null.
 */
void oubv_grid_free(struct OubvGrid *grid);

/**
 * Number of grid nodes (0 on null).
 *
 * # Safety
 * `grid` must be live or null.
 */
uintptr_t oubv_grid_len(const struct OubvGrid *grid);

/**
 * # Safety
 * `grid` must be live; `out` writable.
 */
enum OubvStatus oubv_grid_weight_sum(const struct OubvGrid *grid, double *out);

/**
 * Gaussian mass outside the truncated box.
 *
 * # Safety
 * `grid` must be live; `out` writable.
 */
enum OubvStatus oubv_grid_tail_mass(const struct OubvGrid *grid, double *out);

/**
 * Parses `interval:a,b`, `ball:r`, `square:s`, or a body file path.
 *
 * # Safety
 * `spec` must be a valid NUL-terminated string; `out` writable.
 */
enum OubvStatus oubv_body_parse(const char *spec, uintptr_t dim, struct OubvBody **out);

/**
 * Smooth convex approximant of the body at enlargement `delta`.
 *
 * # Safety
 * `body` must be live; `out` writable.
 */
enum OubvStatus oubv_body_smooth(const struct OubvBody *body, double delta, struct OubvBody **out);

/**
 * # Safety
 * `body` must be a live handle or null.
 */
void oubv_body_free(struct OubvBody *body);

/**
 * Minkowski gauge of the body at a point of `dim` coordinates.
 *
 * # Safety
 * `coords` must hold `dim` doubles; `body` live; `out` writable.
 */
enum OubvStatus oubv_body_minkowski(const struct OubvBody *body,
                                    const double *coords,
                                    uintptr_t dim,
                                    double *out);

/**
 * Closed membership test (gauge <= 1); writes 1 or 0.
 *
 * # Safety
 * `coords` must hold `dim` doubles; `body` live; `out` writable.
 */
enum OubvStatus oubv_body_contains(const struct OubvBody *body,
                                   const double *coords,
                                   uintptr_t dim,
                                   int32_t *out);

/**
 * Field from a node-ordered value buffer of length `len` = grid length.
 *
 * # Safety
 * `values` must hold `len` doubles; `grid` live; `out` writable.
 */
enum OubvStatus oubv_field_from_values(const struct OubvGrid *grid,
                                       const double *values,
                                       uintptr_t len,
                                       struct OubvField **out);

/**
 * Field from an initial-datum spec: `sign`, `step:a`, `linear`,
 * `poly:c0,c1,c2`, or `file:path.csv`.
 *
 * # Safety
 * `spec` must be NUL-terminated; `grid` live; `out` writable.
 */
enum OubvStatus oubv_field_from_datum(const struct OubvGrid *grid,
                                      const char *spec,
                                      struct OubvField **out);

/**
 * Number of node values (0 on null).
 *
 * # Safety
 * `field` must be live or null.
 */
uintptr_t oubv_field_len(const struct OubvField *field);

/**
 * Copies node values into `buf` (length `len` must match the field).
 *
 * # Safety
 * `buf` must hold `len` writable doubles; `field` live.
 */
enum OubvStatus oubv_field_values(const struct OubvField *field, double *buf, uintptr_t len);

/**
 * # Safety
 * `field` must be a live handle or null.
 */
void oubv_field_free(struct OubvField *field);

/**
 * Integral of the field against the Gaussian measure, restricted to `body`
 * when non-null.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum OubvStatus oubv_gaussian_integrate(const struct OubvField *field,
                                        const struct OubvBody *body,
                                        double *out);

/**
 * Whole-space Ornstein-Uhlenbeck semigroup by the Mehler integral.
 *
 * # Safety
 * `field` must be live; `out` writable.
 */
enum OubvStatus oubv_mehler_apply(const struct OubvField *field, double t, struct OubvField **out);

/**
 * int_body |grad u| dgamma (Sobolev-form total variation).
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum OubvStatus oubv_sobolev_variation(const struct OubvField *field,
                                       const struct OubvBody *body,
                                       double *out);

/**
 * Dirichlet-form operator on the strict interior of `body`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum OubvStatus oubv_operator_assemble(const struct OubvGrid *grid,
                                       const struct OubvBody *body,
                                       struct OubvOperator **out);

/**
 * Operator over every grid node (whole-box Neumann proxy).
 *
 * # Safety
 * `grid` must be live; `out` writable.
 */
enum OubvStatus oubv_operator_assemble_full(const struct OubvGrid *grid, struct OubvOperator **out);

/**
 * Number of interior unknowns (0 on null).
 *
 * # Safety
 * `op` must be live or null.
 */
uintptr_t oubv_operator_interior_count(const struct OubvOperator *op);

/**
 * # Safety
 * `op` must be a live handle or null.
 */
void oubv_operator_free(struct OubvOperator *op);

/**
 * u = R(lambda, L) f: solves (lambda M + A) u = M f.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum OubvStatus oubv_solve_resolvent(const struct OubvOperator *op,
                                     double lambda,
                                     const struct OubvField *f,
                                     struct OubvField **out);

/**
 * Approximates T_t u0 with `steps` trapezoidal steps (backward-Euler
 * startup); requires t/steps <= grid spacing.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum OubvStatus oubv_evolve(const struct OubvOperator *op,
                            const struct OubvField *u0,
                            double t,
                            unsigned long long steps,
                            struct OubvField **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OUBV_H */
