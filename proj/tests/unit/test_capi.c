/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "fpme/fpme.h"

static int failures = 0;

#define CHECK(cond)                                                \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: CHECK(%s) failed\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

#define CHECK_OK(call) CHECK((call) == FPME_OK)

static int close_to(double a, double b, double rel) { return fabs(a - b) <= rel * fmax(1.0, fabs(b)); }

static int samples_seen = 0;
static void count_sample(void* user, int sample, double t, int dim, int n, double L, const double* v) {
  (void)user, (void)sample, (void)t, (void)dim, (void)L;
  if (n >= 64 && v) ++samples_seen;
}

int main(void) {
  double x = 0.0;

  CHECK(strcmp(fpme_version(), "1.0.0") == 0);
  CHECK_OK(fpme_gamma(0.5, &x));
  CHECK(close_to(x, sqrt(M_PI), 1e-14));
  CHECK_OK(fpme_hyp2f1(1.0, 1.0, 2.0, -1.0, &x));
  CHECK(close_to(x, log(2.0), 1e-13));
  CHECK_OK(fpme_bessel_j(0.5, 1.0, &x));
  CHECK(close_to(x, sqrt(2.0 / M_PI) * sin(1.0), 1e-13));

  /* errors carry a status and a message */
  CHECK(fpme_gamma(-2.0, &x) != FPME_OK);
  CHECK(strlen(fpme_last_error()) > 0);
  CHECK(fpme_gamma(1.0, NULL) == FPME_E_NULL);
  CHECK(strcmp(fpme_status_string(FPME_E_DOMAIN), "") != 0);

  /* Poisson kernel: (-Delta)^{1/2} (1 + r^2)^{-1} = (1 - r^2) (1 + r^2)^{-2} in one dimension */
  double r[3] = {0.0, 0.5, 2.0}, lap[3];
  CHECK_OK(fpme_frac_lap_rising(1, 0.5, 1.0, 1.0, 1.0, r, 3, lap));
  for (int i = 0; i < 3; ++i) CHECK(close_to(lap[i], (1 - r[i] * r[i]) / pow(1 + r[i] * r[i], 2), 1e-12));

  fpme_solution* sol = NULL;
  CHECK(fpme_solution_create("fpme1-ext", 1, 0.6, &sol) == FPME_E_DOMAIN);
  CHECK(sol == NULL);
  CHECK(fpme_solution_create("no-such-family", 1, 0.5, &sol) != FPME_OK);

  CHECK_OK(fpme_solution_create("fpme1-im", 2, 0.75, &sol));
  fpme_solution_info info;
  CHECK_OK(fpme_solution_info_get(sol, &info));
  CHECK(strcmp(info.family, "fpme1-im") == 0);
  CHECK(close_to(info.q, 0.75, 1e-14) && close_to(info.alpha, 3.0, 1e-14) && close_to(info.beta, 2.0, 1e-14));
  double radius = 1.0;
  CHECK_OK(fpme_solution_fix(sol, NULL, &radius, NULL, 1.0));
  CHECK_OK(fpme_solution_info_get(sol, &info));
  CHECK(isinf(info.mass));

  double grid[60];
  CHECK_OK(fpme_log_grid(1.0, 60, 1e-2, 1e2, grid));
  fpme_report* rep = NULL;
  CHECK_OK(fpme_residual_profile(sol, grid, 60, &rep));
  CHECK(fpme_report_size(rep) == 60);
  CHECK_OK(fpme_report_norm(rep, &x));
  CHECK(x <= 1e-8);
  double res[60];
  CHECK_OK(fpme_report_values(rep, NULL, res, NULL));
  fpme_report_destroy(rep);

  char* json = NULL;
  CHECK_OK(fpme_solution_to_json(sol, &json));
  fpme_solution* back = NULL;
  CHECK_OK(fpme_solution_from_json(json, &back));
  double u1 = 0.0, u2 = 0.0;
  CHECK_OK(fpme_solution_evaluate(sol, 0.7, 1.3, &u1));
  CHECK_OK(fpme_solution_evaluate(back, 0.7, 1.3, &u2));
  CHECK(u1 == u2);
  fpme_free_string(json);
  fpme_solution_destroy(back);
  CHECK(fpme_solution_from_json("{not json", &back) == FPME_E_PARSE);
  fpme_solution_destroy(sol);

  double g[4];
  CHECK_OK(fpme_gap_coefficients(2, 0.5, 1.0, 1.5, 0.5, 3, g));
  CHECK(g[0] == 0.0 && fabs(g[1]) < 1e-15);
  CHECK_OK(fpme_derive(1, 0.5, &json));
  CHECK(strstr(json, "absent") != NULL);
  fpme_free_string(json);

  /* decay run of the Poisson kernel */
  CHECK_OK(fpme_solution_create("fpme1-mc", 1, 0.5, &sol));
  CHECK_OK(fpme_solution_fix(sol, NULL, &radius, NULL, 1.0));
  fpme_experiment_options o;
  fpme_experiment_options_default(&o);
  o.n = 1024;
  o.samples = 11;
  o.on_sample = count_sample;
  fpme_run* run = NULL;
  CHECK_OK(fpme_run_decay(sol, &o, &run));
  fpme_run_summary sum;
  CHECK_OK(fpme_run_summary_get(run, &sum));
  CHECK(fabs(sum.measured + 1.0) < 0.02);
  CHECK(sum.mass_drift <= 1e-8);
  CHECK(fpme_run_series_size(run) == 11);
  CHECK(samples_seen == 11);
  CHECK(fpme_run_log_line(run, 100000) == NULL);
  fpme_run_destroy(run);

  o.n = 100;
  CHECK(fpme_run_decay(sol, &o, &run) == FPME_E_DOMAIN);
  fpme_solution_destroy(sol);

  if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
  return failures ? 1 : 0;
}
