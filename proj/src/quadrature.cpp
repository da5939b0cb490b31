#include "fpme/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fpme/error.hpp"
#include "fpme/specfun.hpp"

namespace fpme::quad {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxTailPanels = 400;

}  // namespace

namespace {

// One 15/31-point Gauss-Kronrod pair on [a, b]: value and |K - G|.
std::pair<double, double> kronrod31(const Fn& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  using G = boost::math::quadrature::gauss<double, 15>;
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double f0 = f(mid);
  double k = f0 * wk[0], g = f0 * wg[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    double pair = f(mid + half * x[i]) + f(mid - half * x[i]);
    k += pair * wk[i];
    if ((i & 1) == 0) g += pair * wg[i / 2];
  }
  return {half * k, half * std::abs(k - g)};
}

double adapt(const Fn& f, double a, double b, double rel_tol, double abs_tol, int depth, double* err) {
  auto [v, e] = kronrod31(f, a, b);
  if (depth == 0 || e <= std::max(abs_tol, rel_tol * std::abs(v)) || e <= 1e-15 * std::abs(v)) {
    *err += e;
    return v;
  }
  const double m = 0.5 * (a + b);
  const double half_tol = 0.5 * std::max(abs_tol, rel_tol * std::abs(v));
  return adapt(f, a, m, rel_tol, half_tol, depth - 1, err) + adapt(f, m, b, rel_tol, half_tol, depth - 1, err);
}

}  // namespace

double gauss_kronrod(const Fn& f, double a, double b, double rel_tol, double* err, double abs_tol) {
  double e = 0.0;
  double v = adapt(f, a, b, rel_tol, abs_tol, 12, &e);
  if (err) *err = e;
  return v;
}

double tanh_sinh(const Fn& f, double a, double b, double rel_tol, double* err) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  double e = 0.0, l1 = 0.0;
  double v = integrator.integrate(f, a, b, rel_tol, &e, &l1);
  if (err) *err = e;
  return v;
}

double exp_sinh(const Fn& f, double a, double rel_tol, double* err) {
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  double e = 0.0, l1 = 0.0;
  double v = integrator.integrate(f, a, kInf, rel_tol, &e, &l1);
  if (err) *err = e;
  return v;
}

void WynnEpsilon::add(double s) {
  std::vector<double> d(diag_.size() + 1);
  d[0] = s;
  std::size_t len = d.size();
  for (std::size_t k = 1; k < d.size(); ++k) {
    double diff = d[k - 1] - diag_[k - 1];
    if (diff == 0.0) {
      len = k;
      break;
    }
    d[k] = (k >= 2 ? diag_[k - 2] : 0.0) + 1.0 / diff;
  }
  d.resize(len);
  diag_ = std::move(d);
  std::size_t even = (diag_.size() - 1) & ~std::size_t{1};
  estimate_ = diag_[even];
  history_.push_back(estimate_);
}

double WynnEpsilon::error() const {
  std::size_t n = history_.size();
  if (n < 3) return kInf;
  return std::abs(history_[n - 1] - history_[n - 2]) + std::abs(history_[n - 1] - history_[n - 3]);
}

double hankel_integral(const Fn& f, double nu, double alpha, double k, const HankelOptions& opt) {
  require(k > 0.0, ErrorCode::domain, "hankel_integral needs k > 0");
  // x = k r; integrand in x carries the Jacobian k^{-1-alpha}.
  auto g = [&](double x) {
    if (x <= 0.0) return 0.0;
    double r = x / k;
    return std::pow(x, alpha) * bessel_j(nu, x) * f(r);
  };
  const double x_lo = opt.lower * k;
  const double x_hi = opt.upper * k;
  const double ks = opt.scale * k;

  // Half-period points of the large-argument form cos(x - nu pi/2 - pi/4).
  auto zero = [&](long n) { return (n + 0.5 * nu + 0.75) * kPi; };
  long n0 = 0;
  while (zero(n0) <= x_lo) ++n0;

  std::vector<double> pts{x_lo};
  {
    double first = zero(n0);
    // Geometric panels resolve f on its own scale and any power-law behaviour
    // between there and the first oscillation.
    double p = x_lo > 0.0 ? 2.0 * x_lo : std::min(ks, first) / 8.0;
    while (p < first && p < x_hi) {
      pts.push_back(p);
      p *= 2.0;
    }
  }
  const double x_direct = std::max(zero(n0), 4.0 * ks + 10.0 * kPi);
  for (long n = n0;; ++n) {
    double z = zero(n);
    if (z >= x_hi || z > x_direct) break;
    if (z > pts.back()) pts.push_back(z);
  }
  if (std::isfinite(x_hi)) {
    // Finite support: walk half-periods to the end, no extrapolation needed.
    long n = n0;
    while (zero(n) <= pts.back()) ++n;
    for (; zero(n) < x_hi; ++n) pts.push_back(zero(n));
    pts.push_back(x_hi);
  }

  double sum = 0.0, mag = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double err = 0.0;
    double v = gauss_kronrod(g, pts[i], pts[i + 1], opt.rel_tol * 0.1, &err, opt.rel_tol * 0.1 * mag);
    sum += v;
    mag = std::max(mag, std::abs(v));
  }
  const double jac = std::pow(k, -1.0 - alpha);
  if (std::isfinite(x_hi)) return jac * sum;

  long n = n0;
  while (zero(n) <= pts.back()) ++n;
  double a = pts.back();
  WynnEpsilon wynn;
  double partial = sum;
  wynn.add(partial);
  for (int i = 0; i < kMaxTailPanels; ++i, ++n) {
    double b = zero(n);
    double v = gauss_kronrod(g, a, b, opt.rel_tol * 0.1, nullptr, opt.rel_tol * 0.1 * mag);
    partial += v;
    mag = std::max(mag, std::abs(v));
    wynn.add(partial);
    a = b;
    if (i >= 6 && wynn.error() <= opt.rel_tol * std::max(std::abs(wynn.estimate()), 1e-3 * mag))
      return jac * wynn.estimate();
  }
  fail(ErrorCode::convergence, "Hankel tail did not converge (k = " + std::to_string(k) +
                                   ", nu = " + std::to_string(nu) + ")");
}

}  // namespace fpme::quad
