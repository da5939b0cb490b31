#pragma once

#include <functional>
#include <limits>
#include <vector>

// Quadrature building blocks shared by the transform oracle, the residual and
// mass checks, and the tests.

namespace fpme::quad {

using Fn = std::function<double(double)>;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Adaptive Gauss-Kronrod (15/31 points) on a finite interval. Bisection stops
/// once the Kronrod-Gauss difference is below max(abs_tol, rel_tol |I|).
double gauss_kronrod(const Fn& f, double a, double b, double rel_tol = 1e-13, double* err = nullptr,
                     double abs_tol = 0.0);

/// Double-exponential rule on a finite interval; tolerates integrable endpoint
/// singularities. Never evaluates f exactly at a or b.
double tanh_sinh(const Fn& f, double a, double b, double rel_tol = 1e-12, double* err = nullptr);

/// Double-exponential rule on [a, inf) for non-oscillatory integrands.
double exp_sinh(const Fn& f, double a, double rel_tol = 1e-12, double* err = nullptr);

/// Wynn epsilon extrapolation of a sequence of partial sums.
class WynnEpsilon {
public:
  void add(double partial_sum);
  double estimate() const { return estimate_; }
  /// Spread of the last three estimates; infinite until three exist.
  double error() const;
  int count() const { return static_cast<int>(diag_.size()); }

private:
  std::vector<double> diag_;
  std::vector<double> history_;
  double estimate_ = 0.0;
};

struct HankelOptions {
  double scale = 1.0;      // length over which f changes appreciably
  double lower = 0.0;      // integrate from here (f is treated as absent below)
  double upper = kInf;     // f vanishes beyond this point
  double rel_tol = 1e-12;
};

/// \int_lower^upper r^alpha J_nu(k r) f(r) dr for k > 0.
///
/// Panels follow the asymptotic half-periods of J_nu; the tail of an infinite
/// range is summed with Wynn acceleration. Throws ErrorCode::convergence when
/// the extrapolated tail does not settle.
double hankel_integral(const Fn& f, double nu, double alpha, double k, const HankelOptions& opt);

}  // namespace fpme::quad
