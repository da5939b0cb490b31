#pragma once

// Real-argument special functions: Gamma, Pochhammer, Gauss 2F1, Bessel J/Y/K.
//
// Every routine here is a pure function of its arguments and may be called
// from any number of threads.

namespace fpme {

/// Where a hypergeometric argument is allowed to live.
enum class ArgDomain {
  unit_disk,      // |x| < 1, the region of the defining power series
  negative_axis,  // x <= 0, any magnitude (profiles evaluated at -|y|^2/R^2)
};

/// Parameter triple (a, b; c) of 2F1 plus the argument-domain tag.
struct Hyper2F1Spec {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  ArgDomain domain = ArgDomain::negative_axis;
};

double gamma(double x);
/// 1/Gamma(x); zero at the poles instead of throwing.
double rgamma(double x);
double digamma(double x);
/// Rising factorial (a)_n = a (a+1) ... (a+n-1).
double pochhammer(double a, int n);

/// True if x is within `tol` of an integer <= 0; stores -x in *n when it is.
bool is_nonpositive_integer(double x, int* n = nullptr, double tol = 1e-12);

/// Gauss hypergeometric function 2F1(a, b; c; x) for x < 1.
///
/// Evaluated by the defining series near the origin, the Pfaff transformation
/// for x < 0 and the 1 - z connection formulas (including the logarithmic
/// cases with integer c - a - b) near the branch point. Throws
/// ErrorCode::domain for x >= 1 or when x falls outside the domain tag and
/// ErrorCode::parameter when c is a non-positive integer that the series
/// cannot terminate before.
double hyper2f1(const Hyper2F1Spec& spec, double x);

/// d/dx 2F1(a, b; c; x) = (ab/c) 2F1(a+1, b+1; c+1; x).
double hyper2f1_derivative(const Hyper2F1Spec& spec, double x);

/// Gauss summation 2F1(a, b; c; 1); requires c - a - b > 0.
double hyper2f1_at_one(double a, double b, double c);

enum class BesselKind { first_j, modified_k };

struct BesselOrder {
  double nu = 0.0;
  BesselKind kind = BesselKind::first_j;
};

/// J_nu or K_nu at x > 0.
double bessel(const BesselOrder& order, double x);

double bessel_j(double nu, double x);
double bessel_y(double nu, double x);
/// K_nu(x); even in nu.
double bessel_k(double nu, double x);

}  // namespace fpme
