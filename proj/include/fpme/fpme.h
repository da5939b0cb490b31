#ifndef FPME_H
#define FPME_H

/* C interface to libfpme: explicit self-similar solutions of the fractional
 * porous medium equations, their residuals, the series re-derivation of the
 * exponents and the periodic spectral solver.
 *
 * Every function returns an fpme_status. On failure the message is available
 * from fpme_last_error() on the calling thread. Handles are opaque and owned
 * by the caller; release them with the matching _destroy function. */

#include <stddef.h>

#if defined(_WIN32)
#define FPME_API __declspec(dllexport)
#elif defined(__GNUC__)
#define FPME_API __attribute__((visibility("default")))
#else
#define FPME_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fpme_status {
  FPME_OK = 0,
  FPME_E_DOMAIN = 1,
  FPME_E_PARAMETER = 2,
  FPME_E_PRECONDITION = 3,
  FPME_E_CONVERGENCE = 4,
  FPME_E_INSTABILITY = 5,
  FPME_E_INFEASIBLE = 6,
  FPME_E_IO = 7,
  FPME_E_PARSE = 8,
  FPME_E_NULL = 9,     /* a required pointer argument was NULL */
  FPME_E_INTERNAL = 10
} fpme_status;

typedef struct fpme_solution fpme_solution;
typedef struct fpme_report fpme_report;
typedef struct fpme_run fpme_run;

FPME_API const char* fpme_version(void);
FPME_API const char* fpme_status_string(fpme_status status);
FPME_API const char* fpme_last_error(void);
FPME_API void fpme_free_string(char* s);

/* Special functions. */
FPME_API fpme_status fpme_gamma(double x, double* out);
FPME_API fpme_status fpme_pochhammer(double a, int n, double* out);
/* 2F1(a, b; c; x) for x <= 0 (any magnitude) or |x| < 1. */
FPME_API fpme_status fpme_hyp2f1(double a, double b, double c, double x, double* out);
FPME_API fpme_status fpme_hyp2f1_derivative(double a, double b, double c, double x, double* out);
FPME_API fpme_status fpme_bessel_j(double nu, double x, double* out);
FPME_API fpme_status fpme_bessel_k(double nu, double x, double* out);

/* Fractional Laplacians of radial profiles, evaluated at n radii.
 * rising:  lambda (R^2 + r^2)^{-q}, returns (-Delta)^s of it
 * compact: lambda (R^2 - r^2)_+^q, returns (-Delta)^{-s} of it */
FPME_API fpme_status fpme_frac_lap_rising(int N, double s, double q, double R, double lambda, const double* r,
                                          size_t n, double* out);
FPME_API fpme_status fpme_inv_frac_lap_compact(int N, double s, double q, double R, double lambda, const double* r,
                                               size_t n, double* out);
/* Transform-based oracle; compact = 0 applies (-Delta)^s to the rising
 * profile, compact = 1 applies (-Delta)^{-s} to the compact profile. */
FPME_API fpme_status fpme_numeric_frac_lap(int N, double s, double q, double R, double lambda, int compact,
                                           const double* r, size_t n, double* out);

/* Self-similar solutions. Family tags: fpme1-mc, fpme1-ext, fpme1-im,
 * fpme3-mc, vss-ext, vss-grow. */
typedef struct fpme_solution_info {
  const char* family; /* static string, valid for the life of the library */
  int N;
  double s, m, q, alpha, beta;
  double lambda, R, C; /* NaN when unset or not applicable */
  int extinction_anchor; /* 1: u = (T - t)^alpha Phi(x (T - t)^beta) */
  double T;
  double mass; /* +inf for infinite-mass families, NaN without constants */
} fpme_solution_info;

FPME_API fpme_status fpme_solution_create(const char* family, int N, double s, fpme_solution** out);
/* Very singular solution; family is vss-ext or vss-grow. */
FPME_API fpme_status fpme_solution_create_vss(const char* family, int N, double s, double m, double T,
                                              fpme_solution** out);
/* Pins lambda and R. mass, radius and lambda may each be NULL. */
FPME_API fpme_status fpme_solution_fix(fpme_solution* sol, const double* mass, const double* radius,
                                       const double* lambda, double T);
FPME_API fpme_status fpme_solution_info_get(const fpme_solution* sol, fpme_solution_info* info);
/* Overrides the exponents, e.g. to test perturbed solutions. */
FPME_API fpme_status fpme_solution_set_exponents(fpme_solution* sol, double m, double q, double alpha, double beta);
FPME_API fpme_status fpme_solution_evaluate(const fpme_solution* sol, double r, double t, double* out);
FPME_API fpme_status fpme_solution_profile(const fpme_solution* sol, double y, double* out);
FPME_API fpme_status fpme_solution_constraint_defect(const fpme_solution* sol, double* out);
FPME_API fpme_status fpme_solution_to_json(const fpme_solution* sol, char** out);
FPME_API fpme_status fpme_solution_from_json(const char* json, fpme_solution** out);
FPME_API void fpme_solution_destroy(fpme_solution* sol);

/* Residuals. */
FPME_API fpme_status fpme_residual_profile(const fpme_solution* sol, const double* grid, size_t n, fpme_report** out);
/* Space-time residual at points (r[i], t[i]) with central-difference step dt. */
FPME_API fpme_status fpme_residual_spacetime(const fpme_solution* sol, const double* r, const double* t, size_t n,
                                             double dt, fpme_report** out);
/* FPME3 profile residual of lambda (R^2 +- r^2)^{+-q} (compact = 1: the
 * compact profile, radii must lie inside the support) with space exponent beta. */
FPME_API fpme_status fpme_residual_fpme3(int N, double s, double m, double beta, int compact, double q, double R,
                                         double lambda, const double* grid, size_t n, fpme_report** out);
FPME_API fpme_status fpme_report_norm(const fpme_report* rep, double* out);
FPME_API size_t fpme_report_size(const fpme_report* rep);
/* Any of the output arrays may be NULL. */
FPME_API fpme_status fpme_report_values(const fpme_report* rep, double* radius, double* residual,
                                        double* normalization);
FPME_API fpme_status fpme_report_write_csv(const fpme_report* rep, const char* path);
FPME_API void fpme_report_destroy(fpme_report* rep);

/* n log-spaced radii in [lo R, hi R]. */
FPME_API fpme_status fpme_log_grid(double R, size_t n, double lo, double hi, double* out);

/* Smallest normalized residual of lambda (1 - |y|^2)_+^q in the FPME3 profile
 * equation (m > 2) over a (q, lambda) search on radii in [r_lo, r_hi]. */
FPME_API fpme_status fpme_nonexistence_search(int N, double s, double m, double r_lo, double r_hi,
                                              double* min_norm, double* q, double* lambda);

/* Series re-derivation of the exponents: JSON document with the beta-tilde
 * roots, their classification and the assembled families. */
FPME_API fpme_status fpme_derive(int N, double s, char** json);
/* Taylor coefficients g_0, g_2, ..., g_{2K} of the gap function into out[0..K]. */
FPME_API fpme_status fpme_gap_coefficients(int N, double s, double m, double q, double beta_tilde, int K,
                                           double* out);

/* Spectral solver experiments. */
typedef enum fpme_stepper {
  FPME_STEPPER_AUTO = 0,
  FPME_STEPPER_INTEGRATING_FACTOR = 1,
  FPME_STEPPER_DOPRI45 = 2,
  FPME_STEPPER_RK4 = 3
} fpme_stepper;

typedef void (*fpme_sample_callback)(void* user, int sample, double t, int dim, int n, double L,
                                     const double* values);

typedef struct fpme_experiment_options {
  int dim;                 /* 1 or 2 */
  int n;                   /* modes per dimension, power of two >= 64 */
  double L;                /* half-width; <= 0 selects the default box */
  int dealias;
  fpme_stepper stepper;
  double dt;               /* initial (rk4: fixed) step */
  double t_end;            /* decay and convergence runs: final time */
  double rtol;
  double tail_tolerance;
  int samples;
  double stop_fraction;    /* extinction runs */
  fpme_sample_callback on_sample; /* may be NULL */
  void* user;
} fpme_experiment_options;

FPME_API void fpme_experiment_options_default(fpme_experiment_options* opts);

typedef struct fpme_run_summary {
  double measured, reference, relative_error;
  double mass_drift, shape_deviation;
  int error_tail_nonincreasing;
  long steps, rejected, instabilities, clipped_points, tail_warnings;
  double worst_negative;
  double L;
  int n, dim;
} fpme_run_summary;

FPME_API fpme_status fpme_run_decay(const fpme_solution* sol, const fpme_experiment_options* opts, fpme_run** out);
FPME_API fpme_status fpme_run_extinction(int N, double s, double T, double R, double amplitude,
                                         const fpme_experiment_options* opts, fpme_run** out);
FPME_API fpme_status fpme_run_profile_convergence(const fpme_solution* sol, double eps,
                                                  const fpme_experiment_options* opts, fpme_run** out);
FPME_API fpme_status fpme_run_summary_get(const fpme_run* run, fpme_run_summary* out);
FPME_API size_t fpme_run_series_size(const fpme_run* run);
/* Any of the output arrays may be NULL. */
FPME_API fpme_status fpme_run_series(const fpme_run* run, double* t, double* sup_norm, double* mass,
                                     double* profile_error);
FPME_API fpme_status fpme_run_write_csv(const fpme_run* run, const char* path);
FPME_API size_t fpme_run_log_size(const fpme_run* run);
/* Static for the life of the run; NULL when i is out of range. */
FPME_API const char* fpme_run_log_line(const fpme_run* run, size_t i);
FPME_API const char* fpme_run_note(const fpme_run* run);
FPME_API void fpme_run_destroy(fpme_run* run);

FPME_API fpme_status fpme_write_snapshot(const char* path, int dim, int n, double L, double t, const double* values);
/* Reads the header into dim, n, L, t; values (n^dim doubles) may be NULL to query the size. */
FPME_API fpme_status fpme_read_snapshot(const char* path, int* dim, int* n, double* L, double* t, double* values);

#ifdef __cplusplus
}
#endif

#endif
