#ifndef SINHGORDON_H
#define SINHGORDON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_PARAM = 2,
  SG_STATUS_POLE = 3,
  SG_STATUS_ZERO_OF_G = 4,
  SG_STATUS_COINCIDENT_RAPIDITIES = 5,
  SG_STATUS_TOO_MANY_PARTICLES = 6,
  SG_STATUS_TIMELIKE = 7,
  SG_STATUS_NON_CONVERGENT = 8,
  SG_STATUS_BUDGET = 9,
  SG_STATUS_INDEX_OUT_OF_RANGE = 10,
  SG_STATUS_CONFIG = 11,
  SG_STATUS_BUFFER_TOO_SMALL = 12,
  SG_STATUS_CHECK_FAILED = 13,
  SG_STATUS_PANIC = 14,
} SgStatus;

/**
 * A local operator.
 */
typedef struct SgOperator SgOperator;

/**
 * Coupling constants and mass.
 */
typedef struct SgParams SgParams;

typedef struct SgComplex {
  double re;
  double im;
} SgComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call from the same thread.
 */
const char *sg_last_error_message(void);

/**
 * Creates parameters from b ∈ (0, 1/2] and mass m > 0.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SgStatus sg_params_from_b(double b, double m, struct SgParams **out);

/**
 * Creates parameters from the coupling g > 0 and mass m > 0.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SgStatus sg_params_from_g(double g, double m, struct SgParams **out);

/**
 * # Safety
 * `params` must be null or a handle from `sg_params_from_*` not yet freed.
 */
void sg_params_free(struct SgParams *params);

/**
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum SgStatus sg_s_matrix(const struct SgParams *params,
                          struct SgComplex beta,
                          struct SgComplex *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SgStatus sg_log_gamma(struct SgComplex z, struct SgComplex *out);

/**
 * Principal value of log G(z).
 *
 * # Safety
 * `out` must be writable.
 */
enum SgStatus sg_log_barnes_g(struct SgComplex z, struct SgComplex *out);

/**
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum SgStatus sg_two_body(const struct SgParams *params,
                          struct SgComplex beta,
                          struct SgComplex *out);

/**
 * The elementary field operator.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum SgStatus sg_operator_field(const struct SgParams *params, struct SgOperator **out);

/**
 * A synthetic operator p(β|ℓ) = κⁿ (Σe^β)^s Σ_j a_j Q^j.
 *
 * # Safety
 * `label` must be a NUL-terminated string, `coeffs` must point to `n_coeffs`
 * values and `out` must be writable.
 */
enum SgStatus sg_operator_synthetic(const char *label,
                                    double spin,
                                    struct SgComplex kappa,
                                    const struct SgComplex *coeffs,
                                    size_t n_coeffs,
                                    struct SgOperator **out);

/**
 * # Safety
 * `op` must be a live handle and `out` writable.
 */
enum SgStatus sg_operator_adjoint(const struct SgOperator *op, struct SgOperator **out);

/**
 * # Safety
 * `op` must be null or a live handle.
 */
void sg_operator_free(struct SgOperator *op);

/**
 * n-particle form factor at rapidities `beta[0..n]`.
 *
 * # Safety
 * Handles must be live, `beta` must point to `n` values and `out` must be writable.
 */
enum SgStatus sg_form_factor(const struct SgOperator *op,
                             const struct SgParams *params,
                             const struct SgComplex *beta,
                             size_t n,
                             struct SgComplex *out);

/**
 * Shells 0..=cap of the two-point kernel at x = (0, r); writes `cap + 1` values.
 *
 * # Safety
 * Handles must be live and `shells` must have room for `len` values.
 */
enum SgStatus sg_two_point_shells(const struct SgOperator *op,
                                  const struct SgParams *params,
                                  double r,
                                  size_t cap,
                                  struct SgComplex *shells,
                                  size_t len);

/**
 * Runs the named axiom check (or "all") and returns its JSON report.
 *
 * `config_json` may be null for the default configuration. The report string
 * must be released with [`sg_string_free`]. A failing check returns
 * `CheckFailed` and still fills `report`.
 *
 * # Safety
 * `check` must be a NUL-terminated string, `config_json` null or one, and
 * `report` writable.
 */
enum SgStatus sg_run_axioms(const char *check, const char *config_json, char **report);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void sg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SINHGORDON_H */
