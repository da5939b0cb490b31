#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fpme/quadrature.hpp"
#include "fpme/specfun.hpp"

// Closed-form fractional Laplacians of radial hypergeometric profiles and an
// independent transform-based oracle.

namespace fpme {

/// (-Delta)^s for s > 0, the inverse operator (-Delta)^{-|s|} for s < 0.
struct FractionalOp {
  double s = 0.5;
  int N = 1;
};

enum class ProfileShape { rising, compact };

/// lambda (R^2 + r^2)^{-q} (rising) or lambda (R^2 - r^2)_+^{q} (compact).
struct RadialProfile {
  ProfileShape shape = ProfileShape::rising;
  double q = 1.0;
  double R = 1.0;
  double lambda = 1.0;
  int N = 1;

  double operator()(double r) const;
  /// d/dr of the profile.
  double derivative(double r) const;
};

/// prefactor * 2F1(a, b; c; -r^2/R^2).
struct HyperField {
  double prefactor = 1.0;
  Hyper2F1Spec spec;
  double R = 1.0;
  std::vector<std::string> warnings;

  double operator()(double r) const;
  double derivative(double r) const;
  double second_derivative(double r) const;
};

void validate(const FractionalOp& op);
void validate(const RadialProfile& p);

/// Admissibility notes for applying op to p: parameter windows in which the
/// closed forms lose their meaning are reported here instead of silently used.
std::vector<std::string> validity_warnings(const FractionalOp& op, const RadialProfile& p);

/// The rising profile as the hypergeometric field lambda R^{-2q} 2F1(q, N/2; N/2; .).
HyperField as_hyper(const RadialProfile& p);

/// (-Delta)^sigma of a field prefactor * 2F1(A, B; N/2; -r^2/R^2), any real sigma
/// with |sigma| < 1: the result has parameters (A+sigma, B+sigma; N/2).
HyperField frac_lap_hyper(const FractionalOp& op, const HyperField& f);

/// (-Delta)^s of a rising profile, s may be negative (inverse operator).
HyperField frac_lap_rising(const FractionalOp& op, const RadialProfile& p);

enum class SpecialCase { i_q_eq_half_n_plus_1_minus_s, ii_q_eq_half_n_minus_s };

struct SpecialResult {
  SpecialCase kind;
  HyperField field;      // both cases
  RadialProfile rising;  // case (ii) only: the result is again a rising profile
  double operator()(double r) const { return field(r); }
};

/// The two parameter choices for which the hypergeometric result collapses.
SpecialResult frac_lap_rising_special(const FractionalOp& op, const RadialProfile& p);

struct CompactConstants {
  double inside;   // C_{q,s,N}
  double outside;  // C~_{q,s,N}
};

CompactConstants compact_constants(double q, double s, int N);

/// (-Delta)^{-s} of a compact profile at radius r; op.s is the (positive)
/// order of the inverse operator.
double inv_frac_lap_compact(const FractionalOp& op, const RadialProfile& p, double r);
/// Radial derivative of inv_frac_lap_compact.
double inv_frac_lap_compact_derivative(const FractionalOp& op, const RadialProfile& p, double r);

/// coefficient * xi^power * K_mu(xi R).
struct FourierField {
  double coefficient = 0.0;
  double power = 0.0;
  double mu = 0.0;
  double R = 1.0;
  double operator()(double xi) const;
};

/// Closed-form Fourier transform of a rising profile (rho = -q, mu = N/2 - q).
FourierField fourier_pair(const RadialProfile& p);

enum class Direction { forward, inverse };

/// Radial Fourier transform (2 pi)^{+-N/2} k^{1-N/2} int r^{N/2} J_{N/2-1}(k r) f(r) dr.
/// `scale` is the length on which f varies; `support` bounds f's support.
double radial_transform(const std::function<double(double)>& f, Direction dir, int N, double k,
                        double scale = 1.0, double support = quad::kInf);

/// Numerical fractional Laplacian computed without any hypergeometric identity.
///
/// Rising or general smooth radial inputs go through the Fourier route: the
/// forward transform is tabulated once (piecewise Chebyshev on geometric and
/// uniform panels), multiplied by |xi|^{2s} and transformed back per radius.
/// Compact inputs with negative order use the Riesz potential in real space.
class NumericFracLap {
public:
  NumericFracLap(const FractionalOp& op, const RadialProfile& p);
  /// Arbitrary radial input decaying on length `scale`.
  NumericFracLap(const FractionalOp& op, std::function<double(double)> f, double scale);
  ~NumericFracLap();
  NumericFracLap(NumericFracLap&&) noexcept;
  NumericFracLap& operator=(NumericFracLap&&) noexcept;

  double operator()(double r) const;
  /// The tabulated forward transform at xi (Fourier route only).
  double forward(double xi) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

double numeric_frac_lap(const FractionalOp& op, const RadialProfile& p, double r);

/// c_{N,s} \int f(|y|) |x - y|^{2s-N} dy for a radial f supported in [0, support].
double riesz_potential(double s, int N, const std::function<double(double)>& f, double r,
                       double support, double scale);

struct WeberSchafheitlin {
  double lhs;
  double rhs;
};

/// Quadrature and closed form of int_0^inf eta^{-rho} K_mu(eta a) J_nu(eta b) d eta.
WeberSchafheitlin weber_schafheitlin_check(double mu, double nu, double rho, double a, double b);

}  // namespace fpme
