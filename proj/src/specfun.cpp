#include "fpme/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

#include "fpme/error.hpp"

namespace fpme {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxTerms = 10000;
constexpr double kSeriesRel = 1e-17;

// Below this distance from an integer c-a-b counts as exactly integer and the
// logarithmic connection formula is used.
constexpr double kIntegerSnap = 1e-12;
// Between kIntegerSnap and this distance the plain connection formula loses too
// many digits; those points are reached by analytic continuation of the ODE.
constexpr double kNearInteger = 0.05;
constexpr double kSeriesEdge = 0.75;

// Neumaier compensated accumulator.
struct Sum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

bool near_integer(double x, double tol, long* n = nullptr) {
  double r = std::round(x);
  if (std::abs(x - r) > tol) return false;
  if (n) *n = static_cast<long>(r);
  return true;
}

std::string params(double a, double b, double c) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + "; " + std::to_string(c) + ")";
}

// Defining power series. Terminates exactly for polynomial cases.
double series(double a, double b, double c, double x) {
  Sum sum;
  double term = 1.0;
  sum.add(term);
  int small = 0;
  for (int n = 0; n < kMaxTerms; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x;
    if (term == 0.0) return sum.value();
    sum.add(term);
    if (std::abs(term) < kSeriesRel * std::abs(sum.value())) {
      if (++small == 3) return sum.value();
    } else {
      small = 0;
    }
  }
  fail(ErrorCode::convergence, "2F1 series did not converge for " + params(a, b, c) +
                                   " at x = " + std::to_string(x));
}

bool polynomial(double a, double b) {
  return is_nonpositive_integer(a) || is_nonpositive_integer(b);
}

double positive_axis(double a, double b, double c, double z);

// c - a - b = m exactly, m >= 0 integer; logarithmic connection to 1 - z.
double log_connection(double a, double b, long m, double z) {
  const double c = a + b + m;
  const double w = 1.0 - z;
  const double lw = std::log(w);

  Sum finite;
  if (m > 0) {
    double term = 1.0;
    for (long k = 0; k < m; ++k) {
      finite.add(term);
      term *= (a + k) * (b + k) / ((k + 1.0) * (1.0 - m + k)) * w;
    }
  }
  const double pre_finite =
      m > 0 ? gamma(static_cast<double>(m)) * gamma(c) * rgamma(a + m) * rgamma(b + m) : 0.0;

  Sum tail;
  double coef = 1.0 / std::tgamma(static_cast<double>(m) + 1.0);  // (a+m)_0 (b+m)_0 / (0! m!)
  int small = 0;
  for (int k = 0; k < kMaxTerms; ++k) {
    double bracket = lw - boost::math::digamma(k + 1.0) - boost::math::digamma(k + m + 1.0) +
                     boost::math::digamma(a + k + m) + boost::math::digamma(b + k + m);
    double term = coef * bracket;
    tail.add(term);
    if (std::abs(term) < kSeriesRel * std::abs(tail.value()) || coef == 0.0) {
      if (++small == 3) break;
    } else {
      small = 0;
    }
    coef *= (a + m + k) * (b + m + k) / ((k + 1.0) * (k + m + 1.0)) * w;
    if (k == kMaxTerms - 1)
      fail(ErrorCode::convergence, "2F1 logarithmic series did not converge for " + params(a, b, c));
  }
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;  // (z-1)^m = (-1)^m w^m
  const double pre_tail = sign * std::pow(w, static_cast<double>(m)) * gamma(c) * rgamma(a) * rgamma(b);
  return pre_finite * finite.value() - pre_tail * tail.value();
}

// Plain connection formula for non-integer d = c - a - b.
double connection(double a, double b, double c, double z) {
  const double d = c - a - b;
  const double w = 1.0 - z;
  const double gc = gamma(c);
  double t1 = gc * gamma(d) * rgamma(c - a) * rgamma(c - b);
  double t2 = gc * gamma(-d) * rgamma(a) * rgamma(b);
  double v = 0.0;
  if (t1 != 0.0) v += t1 * series(a, b, 1.0 - d, w);
  if (t2 != 0.0) v += t2 * std::pow(w, d) * series(c - a, c - b, 1.0 + d, w);
  return v;
}

// Re-expands the solution of z(1-z)F'' + [c-(a+b+1)z]F' - abF = 0 in Taylor
// series at successive centres, starting from the defining series at
// kSeriesEdge and halving the distance to z = 1 at most per step.
double ode_continuation(double a, double b, double c, double z) {
  double z0 = kSeriesEdge;
  double f = series(a, b, c, z0);
  double df = a * b / c * series(a + 1.0, b + 1.0, c + 1.0, z0);
  const double q1 = -(a + b + 1.0);
  while (z0 < z) {
    const double t = std::min(z - z0, 0.5 * (1.0 - z0));
    const double p0 = z0 * (1.0 - z0), p1 = 1.0 - 2.0 * z0;
    const double q0 = c + q1 * z0;
    // e_n = c_n t^n, the scaled Taylor coefficients, stay bounded as t shrinks.
    double en = f, en1 = df * t;
    Sum val, der;
    val.add(en);
    val.add(en1);
    der.add(en1);
    int small = 0;
    for (int n = 0; n < kMaxTerms; ++n) {
      const double en2 = -((p1 * n + q0) * (n + 1.0) * en1 * t + (-n * (n - 1.0) + q1 * n - a * b) * en * t * t) /
                         (p0 * (n + 2.0) * (n + 1.0));
      const double dterm = (n + 2.0) * en2;
      val.add(en2);
      der.add(dterm);
      en = en1;
      en1 = en2;
      if (std::abs(en2) <= kSeriesRel * std::abs(val.value()) &&
          std::abs(dterm) <= kSeriesRel * std::abs(der.value())) {
        if (++small == 3) break;
      } else {
        small = 0;
      }
      if (n == kMaxTerms - 1)
        fail(ErrorCode::convergence, "2F1 continuation did not converge for " + params(a, b, c));
    }
    f = val.value();
    df = der.value() / t;
    z0 += t;
  }
  return f;
}

// 0 <= z < 1.
double positive_axis(double a, double b, double c, double z) {
  if (polynomial(a, b) || z <= kSeriesEdge) return series(a, b, c, z);
  const double d = c - a - b;
  // Euler transform turns these into (1-z)^d times a polynomial.
  if (polynomial(c - a, c - b)) return std::pow(1.0 - z, d) * series(c - a, c - b, c, z);

  long m = 0;
  if (near_integer(d, kIntegerSnap, &m)) {
    if (m >= 0) return log_connection(a, b, m, z);
    // Euler: the transformed triple has c - a' - b' = -m > 0.
    return std::pow(1.0 - z, d) * log_connection(c - a, c - b, -m, z);
  }
  if (near_integer(d, kNearInteger)) return ode_continuation(a, b, c, z);
  return connection(a, b, c, z);
}

}  // namespace

bool is_nonpositive_integer(double x, int* n, double tol) {
  if (x > tol) return false;
  long k = 0;
  if (!near_integer(x, tol, &k)) return false;
  if (n) *n = static_cast<int>(-k);
  return true;
}

double gamma(double x) {
  if (is_nonpositive_integer(x, nullptr, 0.0))
    fail(ErrorCode::parameter, "Gamma pole at x = " + std::to_string(x));
  if (x < 0.0) {
    // Reflection keeps full accuracy for the negative non-integer prefactors.
    return kPi / (boost::math::sin_pi(x) * boost::math::tgamma(1.0 - x));
  }
  return boost::math::tgamma(x);
}

double rgamma(double x) {
  if (is_nonpositive_integer(x, nullptr, 0.0)) return 0.0;
  if (x > 170.0) return 0.0;
  return 1.0 / gamma(x);
}

double digamma(double x) {
  if (is_nonpositive_integer(x, nullptr, 0.0))
    fail(ErrorCode::parameter, "digamma pole at x = " + std::to_string(x));
  return boost::math::digamma(x);
}

double pochhammer(double a, int n) {
  require(n >= 0, ErrorCode::precondition, "pochhammer: negative order");
  double p = 1.0;
  for (int k = 0; k < n; ++k) p *= a + k;
  return p;
}

double hyper2f1(const Hyper2F1Spec& spec, double x) {
  const double a = spec.a, b = spec.b, c = spec.c;
  if (!(x < 1.0)) fail(ErrorCode::domain, "2F1 argument must be < 1, got " + std::to_string(x));
  if (spec.domain == ArgDomain::unit_disk && !(std::abs(x) < 1.0))
    fail(ErrorCode::domain, "2F1 unit-disk argument out of range: " + std::to_string(x));
  if (spec.domain == ArgDomain::negative_axis && x > 0.0)
    fail(ErrorCode::domain, "2F1 negative-axis argument is positive: " + std::to_string(x));

  int kc = 0;
  if (is_nonpositive_integer(c, &kc)) {
    int na = 0, nb = 0;
    bool ok = (is_nonpositive_integer(a, &na) && na <= kc) || (is_nonpositive_integer(b, &nb) && nb <= kc);
    if (!ok) fail(ErrorCode::parameter, "2F1 with c a non-positive integer: " + params(a, b, c));
    return series(a, b, c, x);
  }
  if (x == 0.0) return 1.0;
  if (polynomial(a, b)) return series(a, b, c, x);
  if (a == c) return std::pow(1.0 - x, -b);
  if (b == c) return std::pow(1.0 - x, -a);

  if (x >= 0.0) return positive_axis(a, b, c, x);

  // Pfaff: 2F1(a,b;c;x) = (1-x)^{-a} 2F1(a, c-b; c; x/(x-1)) maps x < 0 into (0, 1).
  const double w = x / (x - 1.0);
  const double lx = std::log1p(-x);
  auto pfaff = [&](double p, double r) { return std::exp(-p * lx) * positive_axis(p, c - r, c, w); };
  // Prefer an ordering that terminates, then one whose transformed series has
  // no sign changes.
  if (is_nonpositive_integer(c - b)) return pfaff(a, b);
  if (is_nonpositive_integer(c - a)) return pfaff(b, a);
  auto positive_terms = [&](double p, double r) { return p > 0.0 && c - r > 0.0; };
  if (positive_terms(a, b) || !positive_terms(b, a)) return pfaff(a, b);
  return pfaff(b, a);
}

double hyper2f1_derivative(const Hyper2F1Spec& spec, double x) {
  if (spec.a == 0.0 || spec.b == 0.0) {
    hyper2f1(spec, x);  // domain checks
    return 0.0;
  }
  Hyper2F1Spec up{spec.a + 1.0, spec.b + 1.0, spec.c + 1.0, spec.domain};
  return spec.a * spec.b / spec.c * hyper2f1(up, x);
}

double hyper2f1_at_one(double a, double b, double c) {
  require(c - a - b > 0.0, ErrorCode::precondition,
          "Gauss summation needs c - a - b > 0 for " + params(a, b, c));
  return gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b);
}

double bessel_j(double nu, double x) {
  require(x > 0.0, ErrorCode::domain, "Bessel argument must be positive");
  if (nu == 0.5) return std::sqrt(2.0 / (kPi * x)) * std::sin(x);
  if (nu == -0.5) return std::sqrt(2.0 / (kPi * x)) * std::cos(x);
  if (nu < 0.0) {
    long n = 0;
    if (near_integer(nu, 0.0, &n)) return ((n % 2) ? -1.0 : 1.0) * boost::math::cyl_bessel_j(-nu, x);
    return boost::math::cos_pi(nu) * boost::math::cyl_bessel_j(-nu, x) +
           boost::math::sin_pi(nu) * boost::math::cyl_neumann(-nu, x);
  }
  return boost::math::cyl_bessel_j(nu, x);
}

double bessel_y(double nu, double x) {
  require(x > 0.0, ErrorCode::domain, "Bessel argument must be positive");
  return boost::math::cyl_neumann(nu, x);
}

double bessel_k(double nu, double x) {
  require(x > 0.0, ErrorCode::domain, "Bessel argument must be positive");
  nu = std::abs(nu);
  if (nu == 0.5) return std::sqrt(kPi / (2.0 * x)) * std::exp(-x);
  if (x > 700.0) return 0.0;
  try {
    return boost::math::cyl_bessel_k(nu, x);
  } catch (const std::overflow_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

double bessel(const BesselOrder& order, double x) {
  if (order.kind == BesselKind::modified_k) return bessel_k(order.nu, x);
  require(order.nu >= 0.0, ErrorCode::domain, "J-kind Bessel order must be non-negative");
  return bessel_j(order.nu, x);
}

}  // namespace fpme
