#include "fpme/evolve.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "fpme/error.hpp"

namespace fpme {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// Plan creation in FFTW is not thread-safe; execution on distinct buffers is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

void init_fftw_threads() {
  static std::once_flag once;
  std::call_once(once, [] { fftw_init_threads(); });
}

constexpr int kMaxLog = 20;

void note(RunStats& st, const std::string& msg) {
  if (st.log.size() < kMaxLog) st.log.push_back(msg);
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

std::size_t SpectralGrid::size() const {
  std::size_t s = 1;
  for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
  return s;
}

void validate(const SpectralGrid& g) {
  require(g.dim == 1 || g.dim == 2, ErrorCode::domain, "grid dimension must be 1 or 2");
  require(g.n >= 64 && std::has_single_bit(static_cast<unsigned>(g.n)), ErrorCode::domain,
          "modes per dimension must be a power of two >= 64, got " + std::to_string(g.n));
  require(g.L > 0.0 && std::isfinite(g.L), ErrorCode::domain, "box half-width L must be positive");
}

std::string to_string(Stepper s) {
  switch (s) {
    case Stepper::automatic:
      return "auto";
    case Stepper::integrating_factor:
      return "if";
    case Stepper::dopri45:
      return "dopri45";
    case Stepper::rk4:
      return "rk4";
  }
  return "auto";
}

Stepper stepper_from_string(const std::string& tag) {
  if (tag == "auto") return Stepper::automatic;
  if (tag == "if") return Stepper::integrating_factor;
  if (tag == "dopri45") return Stepper::dopri45;
  if (tag == "rk4") return Stepper::rk4;
  fail(ErrorCode::parse, "unknown stepper '" + tag + "' (expected auto, if, dopri45, rk4)");
}

void validate(const EvolutionConfig& c) {
  require(c.s > 0.0 && c.s < 1.0, ErrorCode::domain, "order s must lie in (0, 1)");
  require(c.m > 0.0 && std::isfinite(c.m), ErrorCode::domain, "exponent m must be positive");
  require(c.dt > 0.0, ErrorCode::domain, "dt must be positive");
  require(c.rtol > 0.0 && c.dt_min > 0.0 && c.max_halvings > 0, ErrorCode::domain, "bad step control settings");
  require(c.stepper != Stepper::integrating_factor || c.m == 1.0, ErrorCode::domain,
          "the integrating-factor stepper needs the linear equation m = 1");
}

// ---------------------------------------------------------------------------
// Field

double Field::sup_norm() const {
  double v = 0.0;
  for (double x : u) v = std::max(v, std::abs(x));
  return v;
}

double Field::min_value() const { return u.empty() ? 0.0 : *std::min_element(u.begin(), u.end()); }

double Field::mass() const {
  // Pairwise-free Kahan sum keeps the drift measurement at rounding level.
  double s = 0.0, c = 0.0;
  for (double x : u) {
    const double y = x - c, t2 = s + y;
    c = (t2 - s) - y;
    s = t2;
  }
  return s * std::pow(grid.spacing(), grid.dim);
}

double Field::tail_ratio() const {
  const int n = grid.n, w = std::max(1, n / 20);
  auto outer = [&](int i) { return i < w || i >= n - w; };
  double edge = 0.0;
  if (grid.dim == 1) {
    for (int i = 0; i < n; ++i)
      if (outer(i)) edge = std::max(edge, std::abs(u[i]));
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (outer(i) || outer(j)) edge = std::max(edge, std::abs(u[static_cast<std::size_t>(i) * n + j]));
  }
  const double sup = sup_norm();
  return sup > 0.0 ? edge / sup : 0.0;
}

double Field::at(int i, int j) const {
  return grid.dim == 1 ? u[i] : u[static_cast<std::size_t>(i) * grid.n + j];
}

Field sample(const SpectralGrid& g, const std::function<double(double)>& f, double t) {
  validate(g);
  Field out{g, t, std::vector<double>(g.size())};
  const int n = g.n;
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) out.u[i] = f(std::abs(g.coordinate(i)));
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out.u[static_cast<std::size_t>(i) * n + j] = f(std::hypot(g.coordinate(i), g.coordinate(j)));
  }
  return out;
}

int transform_threads() {
  const char* env = std::getenv("FPME_NUM_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) return 1;
  return static_cast<int>(std::min<long>(v, 256));
}

// ---------------------------------------------------------------------------
// Evolver

struct Evolver::Impl {
  SpectralGrid g;
  EvolutionConfig c;
  std::size_t nr = 0, nc = 0;
  std::vector<double> k[2];      // wavenumber components per complex index
  std::vector<double> kabs;      // |k|
  std::vector<unsigned char> keep;  // 0 where the dealiasing filter removes the mode
  std::vector<double> linear;    // multiplier of the m = 1 operator
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;  // transform of u
  fftw_complex* gbuf = nullptr;  // scratch spectrum
  fftw_complex* dbuf = nullptr;  // accumulated divergence
  fftw_plan fwd = nullptr, bwd_g = nullptr, fwd_g = nullptr, bwd_d = nullptr;
  RunStats stats;
  double dt_next = 0.0;
  bool fsal_valid = false;
  Stepper stepper = Stepper::dopri45;
  std::vector<double> s1, s2, s3, s4, s5, s6, s7, tmp, y;

  Impl(const SpectralGrid& grid, const EvolutionConfig& cfg) : g(grid), c(cfg) {
    validate(g);
    validate(c);
    const int n = g.n;
    nr = g.size();
    nc = (g.dim == 1) ? static_cast<std::size_t>(n / 2 + 1) : static_cast<std::size_t>(n) * (n / 2 + 1);
    const double k0 = M_PI / g.L;
    const int half = n / 2 + 1;
    k[0].assign(nc, 0.0);
    k[1].assign(nc, 0.0);
    kabs.assign(nc, 0.0);
    keep.assign(nc, 1);
    std::vector<unsigned char> nyq0(nc, 0), nyq1(nc, 0);
    const double kcut = (2.0 / 3.0) * k0 * (n / 2);
    for (std::size_t idx = 0; idx < nc; ++idx) {
      int i, j;
      if (g.dim == 1) {
        i = static_cast<int>(idx);
        j = 0;
        k[0][idx] = k0 * i;
        nyq0[idx] = (i == n / 2);
      } else {
        i = static_cast<int>(idx / half);
        j = static_cast<int>(idx % half);
        k[0][idx] = k0 * (i <= n / 2 ? i : i - n);
        k[1][idx] = k0 * j;
        nyq0[idx] = (i == n / 2);
        nyq1[idx] = (j == n / 2);
      }
      kabs[idx] = std::hypot(k[0][idx], k[1][idx]);
      if (g.dealias && (std::abs(k[0][idx]) > kcut || std::abs(k[1][idx]) > kcut)) keep[idx] = 0;
    }
    // Gradient components lose the Nyquist mode (no real derivative there).
    for (std::size_t idx = 0; idx < nc; ++idx) {
      if (nyq0[idx]) k[0][idx] = 0.0;
      if (nyq1[idx]) k[1][idx] = 0.0;
    }
    linear.assign(nc, 0.0);
    for (std::size_t idx = 1; idx < nc; ++idx) {
      if (!keep[idx]) continue;
      if (c.equation == Equation::fpme1) {
        linear[idx] = -std::pow(kabs[idx], 2.0 * c.s);
      } else {
        const double k2 = k[0][idx] * k[0][idx] + k[1][idx] * k[1][idx];
        linear[idx] = -k2 * std::pow(kabs[idx], -2.0 * c.s);
      }
    }

    rbuf = fftw_alloc_real(nr);
    cbuf = fftw_alloc_complex(nc);
    gbuf = fftw_alloc_complex(nc);
    dbuf = fftw_alloc_complex(nc);
    require(rbuf && cbuf && gbuf && dbuf, ErrorCode::precondition, "FFT buffer allocation failed");
    {
      std::lock_guard<std::mutex> lock(plan_mutex());
      init_fftw_threads();
      fftw_plan_with_nthreads(transform_threads());
      // FFTW_ESTIMATE keeps the plan, and so the output bits, independent of timing.
      const unsigned flags = FFTW_ESTIMATE;
      if (g.dim == 1) {
        fwd = fftw_plan_dft_r2c_1d(n, rbuf, cbuf, flags);
        fwd_g = fftw_plan_dft_r2c_1d(n, rbuf, gbuf, flags);
        bwd_g = fftw_plan_dft_c2r_1d(n, gbuf, rbuf, flags);
        bwd_d = fftw_plan_dft_c2r_1d(n, dbuf, rbuf, flags);
      } else {
        fwd = fftw_plan_dft_r2c_2d(n, n, rbuf, cbuf, flags);
        fwd_g = fftw_plan_dft_r2c_2d(n, n, rbuf, gbuf, flags);
        bwd_g = fftw_plan_dft_c2r_2d(n, n, gbuf, rbuf, flags);
        bwd_d = fftw_plan_dft_c2r_2d(n, n, dbuf, rbuf, flags);
      }
    }
    require(fwd && fwd_g && bwd_g && bwd_d, ErrorCode::precondition, "FFT planning failed");

    stepper = c.stepper;
    if (stepper == Stepper::automatic) stepper = (c.m == 1.0) ? Stepper::integrating_factor : Stepper::dopri45;
    dt_next = c.dt;
  }

  ~Impl() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    for (fftw_plan p : {fwd, fwd_g, bwd_g, bwd_d})
      if (p) fftw_destroy_plan(p);
    fftw_free(rbuf);
    fftw_free(cbuf);
    fftw_free(gbuf);
    fftw_free(dbuf);
  }

  double power(double u, double p) const {
    if (p == 0.0) return u > 0.0 ? 1.0 : 0.0;
    return u > 0.0 ? std::pow(u, p) : 0.0;  // 0 by continuity, also for roundoff negatives
  }

  void rhs(const std::vector<double>& u, std::vector<double>& out) {
    out.resize(nr);
    const double inv = 1.0 / static_cast<double>(nr);
    if (c.equation == Equation::fpme1) {
      if (c.m == 1.0) {
        std::copy(u.begin(), u.end(), rbuf);
      } else {
        for (std::size_t i = 0; i < nr; ++i) rbuf[i] = power(u[i], c.m);
      }
      fftw_execute_dft_r2c(fwd_g, rbuf, gbuf);
      for (std::size_t idx = 0; idx < nc; ++idx) {
        const double f = (idx == 0 || !keep[idx]) ? 0.0 : -std::pow(kabs[idx], 2.0 * c.s) * inv;
        gbuf[idx][0] *= f;
        gbuf[idx][1] *= f;
      }
      fftw_execute(bwd_g);
      std::copy(rbuf, rbuf + nr, out.begin());
      return;
    }
    // FPME3: div(u^{m-1} grad p), p = (-Delta)^{-s} u with zero mean.
    std::copy(u.begin(), u.end(), rbuf);
    fftw_execute(fwd);
    for (std::size_t idx = 0; idx < nc; ++idx) dbuf[idx][0] = dbuf[idx][1] = 0.0;
    for (int d = 0; d < g.dim; ++d) {
      for (std::size_t idx = 0; idx < nc; ++idx) {
        const double f = (idx == 0) ? 0.0 : k[d][idx] * std::pow(kabs[idx], -2.0 * c.s) * inv;
        // i f (re + i im) = -f im + i f re
        gbuf[idx][0] = -f * cbuf[idx][1];
        gbuf[idx][1] = f * cbuf[idx][0];
      }
      fftw_execute(bwd_g);
      for (std::size_t i = 0; i < nr; ++i) rbuf[i] *= (c.m == 1.0) ? 1.0 : power(u[i], c.m - 1.0);
      fftw_execute(fwd_g);
      for (std::size_t idx = 0; idx < nc; ++idx) {
        const double f = keep[idx] ? k[d][idx] * inv : 0.0;
        dbuf[idx][0] += -f * gbuf[idx][1];
        dbuf[idx][1] += f * gbuf[idx][0];
      }
    }
    dbuf[0][0] = dbuf[0][1] = 0.0;
    fftw_execute(bwd_d);
    std::copy(rbuf, rbuf + nr, out.begin());
  }

  void exact_linear(const std::vector<double>& u, double dt, std::vector<double>& out) {
    std::copy(u.begin(), u.end(), rbuf);
    fftw_execute(fwd);
    const double inv = 1.0 / static_cast<double>(nr);
    for (std::size_t idx = 0; idx < nc; ++idx) {
      const double f = (idx == 0) ? inv : (keep[idx] ? std::exp(linear[idx] * dt) * inv : 0.0);
      gbuf[idx][0] = cbuf[idx][0] * f;
      gbuf[idx][1] = cbuf[idx][1] * f;
    }
    fftw_execute(bwd_g);
    out.assign(rbuf, rbuf + nr);
  }

  static void axpy(std::vector<double>& out, const std::vector<double>& y0, double h,
                   std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
    out.resize(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) {
      double acc = 0.0;
      for (const auto& [w, v] : terms) acc += w * (*v)[i];
      out[i] = y0[i] + h * acc;
    }
  }

  static double sup(const std::vector<double>& v) {
    double r = 0.0;
    for (double x : v) {
      if (!std::isfinite(x)) return INFINITY;
      r = std::max(r, std::abs(x));
    }
    return r;
  }

  // Trial step; returns the scaled error (0 for steppers without an estimate).
  double trial(const std::vector<double>& u, double dt) {
    switch (stepper) {
      case Stepper::integrating_factor:
        exact_linear(u, dt, y);
        return 0.0;
      case Stepper::rk4: {
        rhs(u, s1);
        axpy(tmp, u, 0.5 * dt, {{1.0, &s1}});
        rhs(tmp, s2);
        axpy(tmp, u, 0.5 * dt, {{1.0, &s2}});
        rhs(tmp, s3);
        axpy(tmp, u, dt, {{1.0, &s3}});
        rhs(tmp, s4);
        axpy(y, u, dt, {{1.0 / 6, &s1}, {1.0 / 3, &s2}, {1.0 / 3, &s3}, {1.0 / 6, &s4}});
        return 0.0;
      }
      default:
        break;
    }
    if (!fsal_valid) rhs(u, s1);
    axpy(tmp, u, dt, {{a21, &s1}});
    rhs(tmp, s2);
    axpy(tmp, u, dt, {{a31, &s1}, {a32, &s2}});
    rhs(tmp, s3);
    axpy(tmp, u, dt, {{a41, &s1}, {a42, &s2}, {a43, &s3}});
    rhs(tmp, s4);
    axpy(tmp, u, dt, {{a51, &s1}, {a52, &s2}, {a53, &s3}, {a54, &s4}});
    rhs(tmp, s5);
    axpy(tmp, u, dt, {{a61, &s1}, {a62, &s2}, {a63, &s3}, {a64, &s4}, {a65, &s5}});
    rhs(tmp, s6);
    axpy(y, u, dt, {{b1, &s1}, {b3, &s3}, {b4, &s4}, {b5, &s5}, {b6, &s6}});
    rhs(y, s7);
    double err = 0.0;
    for (std::size_t i = 0; i < nr; ++i) {
      const double e = dt * (e1 * s1[i] + e3 * s3[i] + e4 * s4[i] + e5 * s5[i] + e6 * s6[i] + e7 * s7[i]);
      err = std::max(err, std::abs(e));
    }
    const double scale = c.rtol * std::max(sup(u), sup(y)) + 1e-300;
    return err / scale;
  }

  double step(Field& f, double dt) {
    require(f.u.size() == nr, ErrorCode::precondition, "field does not match the solver grid");
    const double sup0 = sup(f.u);
    for (int attempt = 0; attempt <= c.max_halvings; ++attempt) {
      if (dt < c.dt_min) break;
      const double err = trial(f.u, dt);
      const double sup1 = sup(y);
      if (!std::isfinite(sup1) || sup1 > 2.0 * sup0 + 1e-300) {
        ++stats.instabilities;
        ++stats.rejected;
        dt *= 0.5;
        continue;
      }
      if (err > 1.0) {
        ++stats.rejected;
        dt *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        continue;
      }
      f.u.swap(y);
      f.t += dt;
      ++stats.steps;
      stats.last_dt = dt;
      if (stepper == Stepper::dopri45) {
        s1.swap(s7);
        fsal_valid = true;
        dt_next = dt * std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
      } else {
        dt_next = (stepper == Stepper::rk4) ? std::min(dt_next, dt) : dt;
      }
      clip(f);
      return dt;
    }
    fail(ErrorCode::instability, "solver could not keep the field bounded at t = " + fmt(f.t) + " (dt reduced to " +
                                     fmt(dt) + ")");
  }

  void clip(Field& f) {
    const double s = f.sup_norm();
    long count = 0;
    double worst = 0.0;
    for (double& x : f.u) {
      if (x < 0.0) {
        worst = std::min(worst, x);
        x = 0.0;
        ++count;
      }
    }
    if (count == 0) return;
    fsal_valid = false;
    stats.clipped_points += count;
    const double rel = s > 0.0 ? worst / s : 0.0;
    stats.worst_negative = std::min(stats.worst_negative, rel);
    if (rel < -1e-12)
      note(stats, "t = " + fmt(f.t) + ": clipped " + std::to_string(count) + " negative values, min u / max u = " +
                      fmt(rel));
  }

  void advance_to(Field& f, double t) {
    while (f.t < t) {
      const double remaining = t - f.t;
      if (remaining <= 1e-12 * std::max(1.0, std::abs(t))) {
        f.t = t;
        break;
      }
      double dt = (stepper == Stepper::integrating_factor) ? remaining : dt_next;
      const double keep_next = dt_next;
      const bool truncated = dt * (1.0 + 1e-8) >= remaining;
      if (truncated) dt = remaining;
      step(f, dt);
      if (truncated && stepper != Stepper::integrating_factor) dt_next = std::max(dt_next, keep_next);
    }
    const double ratio = f.tail_ratio();
    if (ratio > c.tail_tolerance) {
      ++stats.tail_warnings;
      note(stats, "t = " + fmt(f.t) + ": boundary value is " + fmt(ratio) + " of the maximum (tolerance " +
                      fmt(c.tail_tolerance) + "); enlarge L");
    }
  }
};

Evolver::Evolver(const SpectralGrid& g, const EvolutionConfig& c) : impl_(std::make_unique<Impl>(g, c)) {}
Evolver::~Evolver() = default;
Evolver::Evolver(Evolver&&) noexcept = default;
Evolver& Evolver::operator=(Evolver&&) noexcept = default;

const SpectralGrid& Evolver::grid() const { return impl_->g; }
const EvolutionConfig& Evolver::config() const { return impl_->c; }
void Evolver::rhs(const std::vector<double>& u, std::vector<double>& dudt) {
  require(u.size() == impl_->nr, ErrorCode::precondition, "field does not match the solver grid");
  impl_->rhs(u, dudt);
}
double Evolver::step(Field& f, double dt) {
  require(dt > 0.0, ErrorCode::precondition, "dt must be positive");
  impl_->fsal_valid = false;
  return impl_->step(f, dt);
}
void Evolver::advance_to(Field& f, double t) { impl_->advance_to(f, t); }
const RunStats& Evolver::stats() const { return impl_->stats; }

// ---------------------------------------------------------------------------
// Experiments

void write_time_series_csv(std::ostream& os, const std::vector<TimeSeriesRow>& rows) {
  os << "t,sup_norm,mass,profile_error\n";
  os << std::scientific << std::setprecision(16);
  for (const auto& r : rows) os << r.t << ',' << r.sup_norm << ',' << r.mass << ',' << r.profile_error << '\n';
}

double ExperimentResult::relative_error() const {
  return reference != 0.0 ? std::abs(measured - reference) / std::abs(reference) : std::abs(measured);
}

namespace {

// sup over |x| <= radius of |u - exact| / exact(0).
double profile_error(const Field& f, const std::function<double(double)>& exact, double radius) {
  const double peak = exact(0.0);
  const int n = f.grid.n;
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = f.grid.coordinate(i);
    if (f.grid.dim == 1) {
      if (std::abs(x) <= radius) err = std::max(err, std::abs(f.u[i] - exact(std::abs(x))));
      continue;
    }
    for (int j = 0; j < n; ++j) {
      const double r = std::hypot(x, f.grid.coordinate(j));
      if (r <= radius) err = std::max(err, std::abs(f.u[static_cast<std::size_t>(i) * n + j] - exact(r)));
    }
  }
  return err / peak;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept = nullptr) {
  const std::size_t n = x.size();
  require(n >= 2, ErrorCode::precondition, "fit needs at least two samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double b = sxy / sxx;
  if (intercept) *intercept = my - b * mx;
  return b;
}

SelfSimilarSolution with_constants(SelfSimilarSolution sol) {
  if (!sol.has_constants()) sol = fix_constants(sol, ConstantSpec{std::nullopt, 1.0, std::nullopt, 1.0});
  return sol;
}

// Smallest box (at least 20 R) on which the exact solution at t_end has fallen
// to the given fraction of its peak at |x| = L.
double default_half_width(const SelfSimilarSolution& sol, double t_end, double fraction) {
  const double width = sol.R * std::pow(t_end, sol.beta);
  return std::max(20.0 * sol.R, width * std::sqrt(std::pow(fraction, -1.0 / sol.q) - 1.0));
}

void prepare(ExperimentOptions& o, const SelfSimilarSolution& sol) {
  require(o.samples >= 3, ErrorCode::precondition, "need at least 3 output samples");
  require(o.grid.dim == sol.N, ErrorCode::domain,
          "grid dimension " + std::to_string(o.grid.dim) + " does not match N = " + std::to_string(sol.N));
  o.config.equation = sol.equation();
  o.config.s = sol.s;
  o.config.m = sol.m;
}

struct Runner {
  ExperimentOptions& o;
  Evolver ev;
  Field f;
  ExperimentResult res;
  double m0 = 0.0;

  Runner(ExperimentOptions& opts, Field init) : o(opts), ev(init.grid, opts.config), f(std::move(init)) {
    res.grid = f.grid;
    m0 = f.mass();
  }

  void record(int k, const std::function<double(double)>& exact, double radius) {
    TimeSeriesRow row{f.t, f.sup_norm(), f.mass(), exact ? profile_error(f, exact, radius) : 0.0};
    res.mass_drift = std::max(res.mass_drift, std::abs(row.mass - m0) / std::abs(m0));
    res.series.push_back(row);
    if (o.on_sample) o.on_sample(f, k);
  }

  void finish() { res.stats = ev.stats(); }
};

}  // namespace

ExperimentResult run_decay_experiment(const SelfSimilarSolution& in, ExperimentOptions opts) {
  require(in.family == Family::fpme1_mass_conserving || in.family == Family::fpme3_mass_conserving,
          ErrorCode::infeasible,
          "decay experiments run the mass-conserving families only (fpme1-mc, fpme3-mc); got " +
              to_string(in.family));
  const SelfSimilarSolution sol = with_constants(in);
  prepare(opts, sol);
  const double t_end = opts.config.t_end;
  require(t_end > 1.0, ErrorCode::domain, "decay experiments run over [1, t_end] with t_end > 1");
  if (opts.grid.L <= 0.0) opts.grid.L = default_half_width(sol, t_end, 2e-3);

  Runner run(opts, sample(opts.grid, [&](double r) { return evaluate(sol, r, 1.0); }, 1.0));
  std::vector<double> lt, ls;
  for (int k = 0; k < opts.samples; ++k) {
    const double t = std::pow(t_end, static_cast<double>(k) / (opts.samples - 1));
    run.ev.advance_to(run.f, t);
    run.record(k, [&](double r) { return evaluate(sol, r, t); }, 5.0 * sol.R * std::pow(t, sol.beta));
    lt.push_back(std::log(t));
    ls.push_back(std::log(run.res.series.back().sup_norm));
  }
  run.finish();
  run.res.measured = fit_slope(lt, ls);
  run.res.reference = -sol.N * sol.beta;
  return run.res;
}

ExperimentResult run_extinction_experiment(int N, double s, double T, ExperimentOptions opts, double R,
                                           double amplitude) {
  require(T > 0.0 && R > 0.0 && amplitude > 0.0, ErrorCode::domain, "T, R and the amplitude must be positive");
  require(opts.stop_fraction > 0.0 && opts.stop_fraction < 1.0, ErrorCode::domain, "stop fraction must lie in (0, 1)");
  const SelfSimilarSolution sol =
      fix_constants(make_family(Family::fpme1_extinction, N, s), ConstantSpec{std::nullopt, R, std::nullopt, T});
  prepare(opts, sol);
  const double m = sol.m;
  // a u(x, a^{m-1} t) solves the equation and vanishes at T a^{1-m}.
  const double t_ref = T * std::pow(amplitude, 1.0 - m);
  auto exact = [&](double r, double t) {
    const double ts = std::pow(amplitude, m - 1.0) * t;
    return ts < sol.T ? amplitude * evaluate(sol, r, ts) : 0.0;
  };
  if (opts.grid.L <= 0.0) opts.grid.L = std::max(20.0 * R, 0.25 * opts.grid.n * R);

  Runner run(opts, sample(opts.grid, [&](double r) { return exact(r, 0.0); }, 0.0));
  const int i0 = opts.grid.n / 2;  // x = 0
  const int iR = i0 + static_cast<int>(std::lround(R / opts.grid.spacing()));
  auto at0 = [&](const Field& f) { return opts.grid.dim == 1 ? f.at(i0) : f.at(i0, i0); };
  auto ratio = [&](const Field& f) { return at0(f) / (opts.grid.dim == 1 ? f.at(iR) : f.at(i0, iR)); };
  const double sup0 = run.f.sup_norm(), ratio0 = ratio(run.f);

  // Sampling step from the solver's own initial rate: u_t / u = -alpha / (T - t).
  std::vector<double> d;
  run.ev.rhs(run.f.u, d);
  const double rate = (opts.grid.dim == 1 ? d[i0] : d[static_cast<std::size_t>(i0) * opts.grid.n + i0]) / at0(run.f);
  require(rate < 0.0, ErrorCode::instability, "initial data does not decay");
  const double t_guess = -sol.alpha / rate;
  const double dt_sample = (1.0 - std::pow(opts.stop_fraction, 1.0 / sol.alpha)) * t_guess / (opts.samples - 1);

  std::vector<double> ts, ys;
  for (int k = 0; k < 4 * opts.samples; ++k) {
    const double t = dt_sample * k;
    run.ev.advance_to(run.f, t);
    run.record(k, [&](double r) { return exact(r, t); }, 5.0 * R);
    const double sup = run.res.series.back().sup_norm;
    run.res.shape_deviation = std::max(run.res.shape_deviation, std::abs(ratio(run.f) / ratio0 - 1.0));
    ts.push_back(t);
    ys.push_back(std::pow(sup / sup0, 1.0 / sol.alpha));
    if (sup <= opts.stop_fraction * sup0) break;
  }
  run.finish();
  double c0 = 0.0;
  const double slope = fit_slope(ts, ys, &c0);
  run.res.measured = -c0 / slope;
  run.res.reference = t_ref;
  run.res.note = "extinction time from the zero of the linear fit of (sup u / sup u0)^{1/alpha}, fitted until sup u <= " +
                 fmt(opts.stop_fraction) + " sup u0 (t = " + fmt(ts.back()) + ")";
  return run.res;
}

ExperimentResult run_profile_convergence(const SelfSimilarSolution& in, double eps, ExperimentOptions opts) {
  require(in.family == Family::fpme1_mass_conserving || in.family == Family::fpme3_mass_conserving,
          ErrorCode::infeasible, "profile convergence runs the mass-conserving families only");
  require(eps >= 0.0 && eps <= 0.2, ErrorCode::domain, "perturbation amplitude must lie in [0, 0.2]");
  const SelfSimilarSolution sol = with_constants(in);
  prepare(opts, sol);
  const double t_end = opts.config.t_end;
  require(t_end > 1.0, ErrorCode::domain, "profile convergence runs over [1, t_end] with t_end > 1");
  if (opts.grid.L <= 0.0) opts.grid.L = default_half_width(sol, t_end, 2e-4);

  const double R = sol.R;
  Field init = sample(
      opts.grid,
      [&](double r) {
        const double bump = std::exp(-r * r / (R * R)) * std::cos(M_PI * r / R);
        return evaluate(sol, r, 1.0) * (1.0 + eps * bump);
      },
      1.0);
  const double exact_mass = sample(opts.grid, [&](double r) { return evaluate(sol, r, 1.0); }, 1.0).mass();
  const double scale = exact_mass / init.mass();
  for (double& x : init.u) x *= scale;

  Runner run(opts, std::move(init));
  for (int k = 0; k < opts.samples; ++k) {
    const double t = std::pow(t_end, static_cast<double>(k) / (opts.samples - 1));
    run.ev.advance_to(run.f, t);
    run.record(k, [&](double r) { return evaluate(sol, r, t); }, 5.0 * R * std::pow(t, sol.beta));
  }
  run.finish();
  const auto& S = run.res.series;
  // Non-increasing over the last third, up to rounding of the error itself.
  for (std::size_t k = S.size() - S.size() / 3; k + 1 < S.size(); ++k)
    if (S[k + 1].profile_error > S[k].profile_error * (1.0 + 1e-9) + 1e-15) run.res.error_tail_nonincreasing = false;
  run.res.measured = S.back().profile_error;
  run.res.reference = S.front().profile_error;
  return run.res;
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

constexpr char kMagic[8] = {'F', 'P', 'M', 'E', 'S', 'N', 'P', '1'};

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  is.read(reinterpret_cast<char*>(b), sizeof(T));
  require(static_cast<bool>(is), ErrorCode::io, "truncated snapshot");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void write_snapshot(std::ostream& os, const Field& f) {
  os.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.dim));
  for (int d = 0; d < f.grid.dim; ++d) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.n));
  put_le<double>(os, f.grid.L);
  put_le<double>(os, f.t);
  for (double x : f.u) put_le<double>(os, x);
  require(static_cast<bool>(os), ErrorCode::io, "snapshot write failed");
}

Field read_snapshot(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  require(is && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, ErrorCode::parse, "not an FPMESNP1 snapshot");
  Field f;
  f.grid.dim = static_cast<int>(get_le<std::uint32_t>(is));
  require(f.grid.dim == 1 || f.grid.dim == 2, ErrorCode::parse, "snapshot dimension must be 1 or 2");
  std::uint32_t n0 = get_le<std::uint32_t>(is);
  for (int d = 1; d < f.grid.dim; ++d)
    require(get_le<std::uint32_t>(is) == n0, ErrorCode::parse, "snapshot grids must be square");
  f.grid.n = static_cast<int>(n0);
  f.grid.L = get_le<double>(is);
  f.t = get_le<double>(is);
  f.u.resize(f.grid.size());
  for (double& x : f.u) x = get_le<double>(is);
  return f;
}

}  // namespace fpme
