#include "fpme/fpme.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "fpme/catalog.hpp"
#include "fpme/derive.hpp"
#include "fpme/error.hpp"
#include "fpme/evolve.hpp"
#include "fpme/fraclap.hpp"
#include "fpme/residual.hpp"
#include "fpme/specfun.hpp"

struct fpme_solution {
  fpme::SelfSimilarSolution sol;
};

struct fpme_report {
  fpme::ResidualReport rep;
};

struct fpme_run {
  fpme::ExperimentResult res;
};

namespace {

thread_local std::string last_error;

fpme_status to_status(fpme::ErrorCode c) {
  switch (c) {
    case fpme::ErrorCode::domain:
      return FPME_E_DOMAIN;
    case fpme::ErrorCode::parameter:
      return FPME_E_PARAMETER;
    case fpme::ErrorCode::precondition:
      return FPME_E_PRECONDITION;
    case fpme::ErrorCode::convergence:
      return FPME_E_CONVERGENCE;
    case fpme::ErrorCode::instability:
      return FPME_E_INSTABILITY;
    case fpme::ErrorCode::infeasible:
      return FPME_E_INFEASIBLE;
    case fpme::ErrorCode::io:
      return FPME_E_IO;
    case fpme::ErrorCode::parse:
      return FPME_E_PARSE;
  }
  return FPME_E_INTERNAL;
}

template <class F>
fpme_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return FPME_OK;
  } catch (const fpme::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return FPME_E_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return FPME_E_INTERNAL;
  }
}

template <class F>
fpme_status guard_ptr(std::initializer_list<std::pair<const void*, const char*>> ptrs, F&& f) {
  for (const auto& [p, name] : ptrs) {
    if (!p) {
      last_error = std::string("argument '") + name + "' is NULL";
      return FPME_E_NULL;
    }
  }
  return guard(std::forward<F>(f));
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const char* family_tag(fpme::Family f) {
  switch (f) {
    case fpme::Family::fpme1_mass_conserving:
      return "fpme1-mc";
    case fpme::Family::fpme1_extinction:
      return "fpme1-ext";
    case fpme::Family::fpme1_infinite_mass:
      return "fpme1-im";
    case fpme::Family::fpme3_mass_conserving:
      return "fpme3-mc";
    case fpme::Family::vss_extinction:
      return "vss-ext";
    case fpme::Family::vss_growing:
      return "vss-grow";
  }
  return "unknown";
}

fpme::ExperimentOptions convert(const fpme_experiment_options* o) {
  fpme::ExperimentOptions e;
  e.grid.dim = o->dim;
  e.grid.n = o->n;
  e.grid.L = o->L;
  e.grid.dealias = o->dealias != 0;
  switch (o->stepper) {
    case FPME_STEPPER_INTEGRATING_FACTOR:
      e.config.stepper = fpme::Stepper::integrating_factor;
      break;
    case FPME_STEPPER_DOPRI45:
      e.config.stepper = fpme::Stepper::dopri45;
      break;
    case FPME_STEPPER_RK4:
      e.config.stepper = fpme::Stepper::rk4;
      break;
    default:
      e.config.stepper = fpme::Stepper::automatic;
  }
  e.config.dt = o->dt;
  e.config.t_end = o->t_end;
  e.config.rtol = o->rtol;
  e.config.tail_tolerance = o->tail_tolerance;
  e.samples = o->samples;
  e.stop_fraction = o->stop_fraction;
  if (o->on_sample) {
    auto cb = o->on_sample;
    void* user = o->user;
    e.on_sample = [cb, user](const fpme::Field& f, int k) {
      cb(user, k, f.t, f.grid.dim, f.grid.n, f.grid.L, f.u.data());
    };
  }
  return e;
}

template <class F>
void fill(const double* r, size_t n, double* out, F&& f) {
  for (size_t i = 0; i < n; ++i) out[i] = f(r[i]);
}

}  // namespace

extern "C" {

const char* fpme_version(void) { return "1.0.0"; }

const char* fpme_status_string(fpme_status s) {
  switch (s) {
    case FPME_OK:
      return "ok";
    case FPME_E_DOMAIN:
      return "domain error";
    case FPME_E_PARAMETER:
      return "inadmissible parameters";
    case FPME_E_PRECONDITION:
      return "precondition violated";
    case FPME_E_CONVERGENCE:
      return "no convergence";
    case FPME_E_INSTABILITY:
      return "numerical instability";
    case FPME_E_INFEASIBLE:
      return "infeasible request";
    case FPME_E_IO:
      return "i/o error";
    case FPME_E_PARSE:
      return "parse error";
    case FPME_E_NULL:
      return "null argument";
    case FPME_E_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* fpme_last_error(void) { return last_error.c_str(); }

void fpme_free_string(char* s) { std::free(s); }

fpme_status fpme_gamma(double x, double* out) {
  return guard_ptr({{out, "out"}}, [&] { *out = fpme::gamma(x); });
}

fpme_status fpme_pochhammer(double a, int n, double* out) {
  return guard_ptr({{out, "out"}}, [&] { *out = fpme::pochhammer(a, n); });
}

fpme_status fpme_hyp2f1(double a, double b, double c, double x, double* out) {
  return guard_ptr({{out, "out"}}, [&] {
    const auto dom = x <= 0.0 ? fpme::ArgDomain::negative_axis : fpme::ArgDomain::unit_disk;
    *out = fpme::hyper2f1(fpme::Hyper2F1Spec{a, b, c, dom}, x);
  });
}

fpme_status fpme_hyp2f1_derivative(double a, double b, double c, double x, double* out) {
  return guard_ptr({{out, "out"}}, [&] {
    const auto dom = x <= 0.0 ? fpme::ArgDomain::negative_axis : fpme::ArgDomain::unit_disk;
    *out = fpme::hyper2f1_derivative(fpme::Hyper2F1Spec{a, b, c, dom}, x);
  });
}

fpme_status fpme_bessel_j(double nu, double x, double* out) {
  return guard_ptr({{out, "out"}}, [&] { *out = fpme::bessel_j(nu, x); });
}

fpme_status fpme_bessel_k(double nu, double x, double* out) {
  return guard_ptr({{out, "out"}}, [&] { *out = fpme::bessel_k(nu, x); });
}

fpme_status fpme_frac_lap_rising(int N, double s, double q, double R, double lambda, const double* r, size_t n,
                                 double* out) {
  return guard_ptr({{r, "r"}, {out, "out"}}, [&] {
    const fpme::RadialProfile p{fpme::ProfileShape::rising, q, R, lambda, N};
    const auto f = fpme::frac_lap_rising(fpme::FractionalOp{s, N}, p);
    fill(r, n, out, [&](double x) { return f(x); });
  });
}

fpme_status fpme_inv_frac_lap_compact(int N, double s, double q, double R, double lambda, const double* r, size_t n,
                                      double* out) {
  return guard_ptr({{r, "r"}, {out, "out"}}, [&] {
    const fpme::RadialProfile p{fpme::ProfileShape::compact, q, R, lambda, N};
    const fpme::FractionalOp op{s, N};
    fill(r, n, out, [&](double x) { return fpme::inv_frac_lap_compact(op, p, x); });
  });
}

fpme_status fpme_numeric_frac_lap(int N, double s, double q, double R, double lambda, int compact, const double* r,
                                  size_t n, double* out) {
  return guard_ptr({{r, "r"}, {out, "out"}}, [&] {
    const fpme::RadialProfile p{compact ? fpme::ProfileShape::compact : fpme::ProfileShape::rising, q, R, lambda, N};
    const fpme::NumericFracLap op(fpme::FractionalOp{compact ? -s : s, N}, p);
    fill(r, n, out, [&](double x) { return op(x); });
  });
}

fpme_status fpme_solution_create(const char* family, int N, double s, fpme_solution** out) {
  return guard_ptr({{family, "family"}, {out, "out"}}, [&] {
    *out = nullptr;
    const auto f = fpme::family_from_string(family);
    if (fpme::is_vss(f))
      throw fpme::Error(fpme::ErrorCode::precondition, "very singular solutions need m: use fpme_solution_create_vss");
    *out = new fpme_solution{fpme::make_family(f, N, s)};
  });
}

fpme_status fpme_solution_create_vss(const char* family, int N, double s, double m, double T, fpme_solution** out) {
  return guard_ptr({{family, "family"}, {out, "out"}}, [&] {
    *out = nullptr;
    *out = new fpme_solution{fpme::make_vss(fpme::family_from_string(family), N, s, m, T)};
  });
}

fpme_status fpme_solution_fix(fpme_solution* sol, const double* mass, const double* radius, const double* lambda,
                              double T) {
  return guard_ptr({{sol, "sol"}}, [&] {
    fpme::ConstantSpec spec;
    if (mass) spec.mass = *mass;
    if (radius) spec.radius = *radius;
    if (lambda) spec.lambda = *lambda;
    spec.T = T;
    sol->sol = fpme::fix_constants(sol->sol, spec);
  });
}

fpme_status fpme_solution_info_get(const fpme_solution* sol, fpme_solution_info* info) {
  return guard_ptr({{sol, "sol"}, {info, "info"}}, [&] {
    const auto& s = sol->sol;
    info->family = family_tag(s.family);
    info->N = s.N;
    info->s = s.s;
    info->m = s.m;
    info->q = s.q;
    info->alpha = s.alpha;
    info->beta = s.beta;
    info->lambda = s.lambda;
    info->R = s.R;
    info->C = s.C;
    info->extinction_anchor = s.anchor == fpme::TimeAnchor::extinction;
    info->T = s.T;
    info->mass = s.has_constants() || fpme::is_vss(s.family) ? fpme::mass(s) : NAN;
  });
}

fpme_status fpme_solution_set_exponents(fpme_solution* sol, double m, double q, double alpha, double beta) {
  return guard_ptr({{sol, "sol"}}, [&] {
    sol->sol.m = m;
    sol->sol.q = q;
    sol->sol.alpha = alpha;
    sol->sol.beta = beta;
  });
}

fpme_status fpme_solution_evaluate(const fpme_solution* sol, double r, double t, double* out) {
  return guard_ptr({{sol, "sol"}, {out, "out"}}, [&] { *out = fpme::evaluate(sol->sol, r, t); });
}

fpme_status fpme_solution_profile(const fpme_solution* sol, double y, double* out) {
  return guard_ptr({{sol, "sol"}, {out, "out"}}, [&] { *out = sol->sol.profile()(y); });
}

fpme_status fpme_solution_constraint_defect(const fpme_solution* sol, double* out) {
  return guard_ptr({{sol, "sol"}, {out, "out"}}, [&] { *out = fpme::constraint_defect(sol->sol); });
}

fpme_status fpme_solution_to_json(const fpme_solution* sol, char** out) {
  return guard_ptr({{sol, "sol"}, {out, "out"}}, [&] { *out = dup_string(fpme::to_json(sol->sol).dump(2)); });
}

fpme_status fpme_solution_from_json(const char* json, fpme_solution** out) {
  return guard_ptr({{json, "json"}, {out, "out"}}, [&] {
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw fpme::Error(fpme::ErrorCode::parse, e.what());
    }
    *out = new fpme_solution{fpme::solution_from_json(j)};
  });
}

void fpme_solution_destroy(fpme_solution* sol) { delete sol; }

fpme_status fpme_residual_profile(const fpme_solution* sol, const double* grid, size_t n, fpme_report** out) {
  return guard_ptr({{sol, "sol"}, {grid, "grid"}, {out, "out"}}, [&] {
    *out = nullptr;
    *out = new fpme_report{fpme::residual_profile(sol->sol, std::vector<double>(grid, grid + n))};
  });
}

fpme_status fpme_residual_spacetime(const fpme_solution* sol, const double* r, const double* t, size_t n, double dt,
                                    fpme_report** out) {
  return guard_ptr({{sol, "sol"}, {r, "r"}, {t, "t"}, {out, "out"}}, [&] {
    *out = nullptr;
    std::vector<std::pair<double, double>> pts(n);
    for (size_t i = 0; i < n; ++i) pts[i] = {r[i], t[i]};
    *out = new fpme_report{fpme::residual_spacetime(sol->sol, pts, dt)};
  });
}

fpme_status fpme_residual_fpme3(int N, double s, double m, double beta, int compact, double q, double R,
                                double lambda, const double* grid, size_t n, fpme_report** out) {
  return guard_ptr({{grid, "grid"}, {out, "out"}}, [&] {
    *out = nullptr;
    const fpme::RadialProfile p{compact ? fpme::ProfileShape::compact : fpme::ProfileShape::rising, q, R, lambda, N};
    *out = new fpme_report{fpme::residual_fpme3(p, beta, s, m, std::vector<double>(grid, grid + n))};
  });
}

fpme_status fpme_report_norm(const fpme_report* rep, double* out) {
  return guard_ptr({{rep, "rep"}, {out, "out"}}, [&] { *out = rep->rep.norm; });
}

size_t fpme_report_size(const fpme_report* rep) { return rep ? rep->rep.grid.size() : 0; }

fpme_status fpme_report_values(const fpme_report* rep, double* radius, double* residual, double* normalization) {
  return guard_ptr({{rep, "rep"}}, [&] {
    const auto& r = rep->rep;
    for (size_t i = 0; i < r.grid.size(); ++i) {
      if (radius) radius[i] = r.grid[i];
      if (residual) residual[i] = r.residual[i];
      if (normalization) normalization[i] = r.normalization[i];
    }
  });
}

fpme_status fpme_report_write_csv(const fpme_report* rep, const char* path) {
  return guard_ptr({{rep, "rep"}, {path, "path"}}, [&] {
    std::ofstream os(path);
    if (!os) throw fpme::Error(fpme::ErrorCode::io, std::string("cannot open ") + path);
    rep->rep.write_csv(os);
    if (!os) throw fpme::Error(fpme::ErrorCode::io, std::string("write failed: ") + path);
  });
}

void fpme_report_destroy(fpme_report* rep) { delete rep; }

fpme_status fpme_log_grid(double R, size_t n, double lo, double hi, double* out) {
  return guard_ptr({{out, "out"}}, [&] {
    const auto g = fpme::log_grid(R, static_cast<int>(n), lo, hi);
    std::copy(g.begin(), g.end(), out);
  });
}

fpme_status fpme_nonexistence_search(int N, double s, double m, double r_lo, double r_hi, double* min_norm, double* q,
                                     double* lambda) {
  return guard_ptr({{min_norm, "min_norm"}}, [&] {
    const auto r = fpme::nonexistence_search(N, s, m, r_lo, r_hi);
    *min_norm = r.min_norm;
    if (q) *q = r.q;
    if (lambda) *lambda = r.lambda;
  });
}

fpme_status fpme_derive(int N, double s, char** json) {
  return guard_ptr({{json, "json"}}, [&] { *json = dup_string(fpme::derivation_trace(N, s).dump(2)); });
}

fpme_status fpme_gap_coefficients(int N, double s, double m, double q, double beta_tilde, int K, double* out) {
  return guard_ptr({{out, "out"}}, [&] {
    const auto g = fpme::gap_coefficients(N, s, m, q, beta_tilde, K);
    std::copy(g.g.begin(), g.g.end(), out);
  });
}

void fpme_experiment_options_default(fpme_experiment_options* o) {
  if (!o) return;
  const fpme::ExperimentOptions e;
  o->dim = e.grid.dim;
  o->n = e.grid.n;
  o->L = 0.0;
  o->dealias = 0;
  o->stepper = FPME_STEPPER_AUTO;
  o->dt = e.config.dt;
  o->t_end = e.config.t_end;
  o->rtol = e.config.rtol;
  o->tail_tolerance = e.config.tail_tolerance;
  o->samples = e.samples;
  o->stop_fraction = e.stop_fraction;
  o->on_sample = nullptr;
  o->user = nullptr;
}

fpme_status fpme_run_decay(const fpme_solution* sol, const fpme_experiment_options* opts, fpme_run** out) {
  return guard_ptr({{sol, "sol"}, {opts, "opts"}, {out, "out"}}, [&] {
    *out = nullptr;
    *out = new fpme_run{fpme::run_decay_experiment(sol->sol, convert(opts))};
  });
}

fpme_status fpme_run_extinction(int N, double s, double T, double R, double amplitude,
                                const fpme_experiment_options* opts, fpme_run** out) {
  return guard_ptr({{opts, "opts"}, {out, "out"}}, [&] {
    *out = nullptr;
    *out = new fpme_run{fpme::run_extinction_experiment(N, s, T, convert(opts), R, amplitude)};
  });
}

fpme_status fpme_run_profile_convergence(const fpme_solution* sol, double eps, const fpme_experiment_options* opts,
                                         fpme_run** out) {
  return guard_ptr({{sol, "sol"}, {opts, "opts"}, {out, "out"}}, [&] {
    *out = nullptr;
    *out = new fpme_run{fpme::run_profile_convergence(sol->sol, eps, convert(opts))};
  });
}

fpme_status fpme_run_summary_get(const fpme_run* run, fpme_run_summary* out) {
  return guard_ptr({{run, "run"}, {out, "out"}}, [&] {
    const auto& r = run->res;
    out->measured = r.measured;
    out->reference = r.reference;
    out->relative_error = r.relative_error();
    out->mass_drift = r.mass_drift;
    out->shape_deviation = r.shape_deviation;
    out->error_tail_nonincreasing = r.error_tail_nonincreasing;
    out->steps = r.stats.steps;
    out->rejected = r.stats.rejected;
    out->instabilities = r.stats.instabilities;
    out->clipped_points = r.stats.clipped_points;
    out->tail_warnings = r.stats.tail_warnings;
    out->worst_negative = r.stats.worst_negative;
    out->L = r.grid.L;
    out->n = r.grid.n;
    out->dim = r.grid.dim;
  });
}

size_t fpme_run_series_size(const fpme_run* run) { return run ? run->res.series.size() : 0; }

fpme_status fpme_run_series(const fpme_run* run, double* t, double* sup_norm, double* mass, double* profile_error) {
  return guard_ptr({{run, "run"}}, [&] {
    const auto& S = run->res.series;
    for (size_t i = 0; i < S.size(); ++i) {
      if (t) t[i] = S[i].t;
      if (sup_norm) sup_norm[i] = S[i].sup_norm;
      if (mass) mass[i] = S[i].mass;
      if (profile_error) profile_error[i] = S[i].profile_error;
    }
  });
}

fpme_status fpme_run_write_csv(const fpme_run* run, const char* path) {
  return guard_ptr({{run, "run"}, {path, "path"}}, [&] {
    std::ofstream os(path);
    if (!os) throw fpme::Error(fpme::ErrorCode::io, std::string("cannot open ") + path);
    fpme::write_time_series_csv(os, run->res.series);
    if (!os) throw fpme::Error(fpme::ErrorCode::io, std::string("write failed: ") + path);
  });
}

size_t fpme_run_log_size(const fpme_run* run) { return run ? run->res.stats.log.size() : 0; }

const char* fpme_run_log_line(const fpme_run* run, size_t i) {
  if (!run || i >= run->res.stats.log.size()) return nullptr;
  return run->res.stats.log[i].c_str();
}

const char* fpme_run_note(const fpme_run* run) { return run ? run->res.note.c_str() : ""; }

void fpme_run_destroy(fpme_run* run) { delete run; }

fpme_status fpme_write_snapshot(const char* path, int dim, int n, double L, double t, const double* values) {
  return guard_ptr({{path, "path"}, {values, "values"}}, [&] {
    fpme::Field f;
    f.grid.dim = dim;
    f.grid.n = n;
    f.grid.L = L;
    fpme::validate(f.grid);
    f.t = t;
    f.u.assign(values, values + f.grid.size());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw fpme::Error(fpme::ErrorCode::io, std::string("cannot open ") + path);
    fpme::write_snapshot(os, f);
  });
}

fpme_status fpme_read_snapshot(const char* path, int* dim, int* n, double* L, double* t, double* values) {
  return guard_ptr({{path, "path"}, {dim, "dim"}, {n, "n"}, {L, "L"}, {t, "t"}}, [&] {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw fpme::Error(fpme::ErrorCode::io, std::string("cannot open ") + path);
    const fpme::Field f = fpme::read_snapshot(is);
    *dim = f.grid.dim;
    *n = f.grid.n;
    *L = f.grid.L;
    *t = f.t;
    if (values) std::copy(f.u.begin(), f.u.end(), values);
  });
}

}  // extern "C"
