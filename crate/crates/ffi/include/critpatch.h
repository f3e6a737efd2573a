#ifndef CRITPATCH_H
#define CRITPATCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpFamily {
  CP_FAMILY_HOMOGENEOUS = 0,
  CP_FAMILY_F1 = 1,
  CP_FAMILY_F2 = 2,
} CpFamily;

typedef enum CpOutcome {
  CP_OUTCOME_EXTINCTION = 0,
  CP_OUTCOME_GROWTH = 1,
  CP_OUTCOME_INCONCLUSIVE = 2,
} CpOutcome;

typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = 1,
  CP_STATUS_INVALID_ARGUMENT = 2,
  CP_STATUS_DOMAIN = 3,
  CP_STATUS_UNSUPPORTED_REGIME = 4,
  CP_STATUS_DEGENERATE_CASE = 5,
  CP_STATUS_CONVERGENCE = 6,
  CP_STATUS_SINGULAR_SYSTEM = 7,
  CP_STATUS_INSTABILITY = 8,
  CP_STATUS_SCAN_FAILED = 9,
  CP_STATUS_BUFFER_TOO_SMALL = 10,
  CP_STATUS_PANIC = 99,
} CpStatus;

// Opaque initial distribution.
typedef struct CpProfile CpProfile;

// Opaque simulation result.
typedef struct CpReport CpReport;

// Grid settings. `k > 0` fixes the time step, otherwise `k = ratio·h²`.
typedef struct CpResolution {
  uintptr_t m;
  double ratio;
  double k;
  double t_max;
} CpResolution;

typedef struct CpReportSummary {
  enum CpOutcome outcome;
  double stop_time;
  uintptr_t steps;
  double initial_population;
  double final_population;
  uintptr_t samples;
} CpReportSummary;

typedef struct CpEstimate {
  double lower;
  double upper;
  double estimate;
  uintptr_t evaluations;
  // Nonzero when α = 0 already survives.
  int32_t already_survives;
  // Nonzero when the growth end is the scan start.
  int32_t capped;
} CpEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cp_version(void);

// Copies the last error message of this thread into `buf` (NUL
// terminated). `needed`, if not null, receives the required size. Returns
// `BufferTooSmall` when `len` is insufficient.
//
// # Safety
// `buf` must be valid for `len` bytes or null.
enum CpStatus cp_last_error(char *buf, uintptr_t len, uintptr_t *needed);

// Default grid: 200 intervals, `k = h²/4`, horizon 50.
struct CpResolution cp_resolution_default(void);

// `ln B(p, q)`.
//
// # Safety
// `out` must be valid for writes.
enum CpStatus cp_ln_beta(double p, double q, double *out);

// `B(p, q)`.
//
// # Safety
// `out` must be valid for writes.
enum CpStatus cp_beta(double p, double q, double *out);

// Shape parameter γ(α) of the asymmetric family.
//
// # Safety
// `out` must be valid for writes.
enum CpStatus cp_solve_gamma(double alpha, double *out);

// Survival parameter `Q = (a/D)·l^{2+ν-μ}·n0^{μ-ν}`.
//
// # Safety
// `out` must be valid for writes.
enum CpStatus cp_compute_q(double mu,
                           double nu,
                           double a,
                           double d,
                           double l,
                           double n0,
                           double *out);

// Critical habitat length. `is_minimum` receives 1 when survival needs
// `l >= size` and 0 when it needs `l <= size`. At μ = ν + 2 returns
// `DegenerateCase` and writes the critical population to `size`.
//
// # Safety
// `size` and `is_minimum` must be valid for writes.
enum CpStatus cp_critical_habitat(double mu,
                                  double nu,
                                  double qc,
                                  double a,
                                  double d,
                                  double n0,
                                  double *size,
                                  int32_t *is_minimum);

// Critical total population for habitat length `l` (μ > ν).
//
// # Safety
// `out` must be valid for writes.
enum CpStatus cp_critical_population(double mu,
                                     double nu,
                                     double qc,
                                     double a,
                                     double d,
                                     double l,
                                     double *out);

// Solves an `n × n` tridiagonal system. `lower` and `upper` hold `n - 1`
// entries (`lower[i]` is row `i+1`, column `i`).
//
// # Safety
// `diag`, `rhs` and `out` must hold `n` values; `lower` and `upper` must
// hold `n - 1` values (they may be null when `n == 1`).
enum CpStatus cp_thomas_solve(const double *lower,
                              const double *diag,
                              const double *upper,
                              const double *rhs,
                              uintptr_t n,
                              double *out);

// Creates an initial distribution; `fam` is a `CpFamily` value. Release with [`cp_profile_free`].
//
// # Safety
// `out` must be valid for writes.
enum CpStatus cp_profile_new(int32_t fam, double alpha, struct CpProfile **out);

// # Safety
// `profile` must come from [`cp_profile_new`] and not be used afterwards.
void cp_profile_free(struct CpProfile *profile);

// γ(α) of the profile (0 unless asymmetric).
//
// # Safety
// `profile` must be a live handle and `out` valid for writes.
enum CpStatus cp_profile_gamma(const struct CpProfile *profile, double *out);

// Nondimensional initial density at `x` for exponents `(mu, nu)` and
// survival parameter `q`.
//
// # Safety
// `profile` must be a live handle and `out` valid for writes.
enum CpStatus cp_profile_eval(const struct CpProfile *profile,
                              double x,
                              double mu,
                              double nu,
                              double q,
                              double *out);

// Integrates and classifies one run with the default fate policy.
// `res` may be null for the default grid. Release the report with
// [`cp_report_free`].
//
// # Safety
// `profile` must be a live handle, `res` null or valid, `out` valid for
// writes.
enum CpStatus cp_simulate(const struct CpProfile *profile,
                          double mu,
                          double nu,
                          double q,
                          const struct CpResolution *res,
                          struct CpReport **out);

// # Safety
// `report` must come from [`cp_simulate`] and not be used afterwards.
void cp_report_free(struct CpReport *report);

// # Safety
// `report` must be a live handle and `out` valid for writes.
enum CpStatus cp_report_summary(const struct CpReport *report, struct CpReportSummary *out);

// Copies up to `capacity` `(T, N)` samples; `written` receives the count.
// Returns `BufferTooSmall` if the trajectory was truncated.
//
// # Safety
// `times` and `pops` must be valid for `capacity` writes.
enum CpStatus cp_report_trajectory(const struct CpReport *report,
                                   double *times,
                                   double *pops,
                                   uintptr_t capacity,
                                   uintptr_t *written);

// `Q_c(μ, ν, α)` by a descending scan with step `step`. `start <= 0`
// selects the default start; `res` may be null.
//
// # Safety
// `res` null or valid, `out` valid for writes.
enum CpStatus cp_estimate_qc(double mu,
                             double nu,
                             int32_t fam,
                             double alpha,
                             double start,
                             double step,
                             const struct CpResolution *res,
                             struct CpEstimate *out);

// `α_min(μ, ν, Q)` by a descending α scan. `start <= 0` selects the
// default start of 1000; `res` may be null.
//
// # Safety
// `res` null or valid, `out` valid for writes.
enum CpStatus cp_estimate_alpha_min(double mu,
                                    double nu,
                                    int32_t fam,
                                    double q,
                                    double start,
                                    double step,
                                    const struct CpResolution *res,
                                    struct CpEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRITPATCH_H */
