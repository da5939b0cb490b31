#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fpme/catalog.hpp"
#include "fpme/fraclap.hpp"
#include "fpme/specfun.hpp"

// Residuals of the profile equations and of the space-time equations,
// evaluated with the closed-form operators from fraclap.

namespace fpme {

struct ResidualReport {
  std::vector<double> grid;           // radii (or the radius of each space-time point)
  std::vector<double> residual;       // raw residual
  std::vector<double> normalization;  // largest term magnitude at that point
  std::vector<std::string> flags;     // per-point notes, empty when clean
  double norm = 0.0;                  // max |residual| / normalization

  void write_csv(std::ostream& os) const;
};

/// n log-spaced radii in [lo R, hi R].
std::vector<double> log_grid(double R, int n = 60, double lo = 1e-2, double hi = 1e2);

/// (-Delta)^s Phi^m - beta div(y Phi) for a rising profile.
ResidualReport residual_fpme1(const RadialProfile& p, double beta, double s, double m,
                              const std::vector<double>& grid);

/// (-Delta)^s Phi^m - alpha Phi - beta y.grad Phi for a rising profile.
ResidualReport residual_fpme1_secondkind(const RadialProfile& p, double alpha, double beta, double s, double m,
                                         const std::vector<double>& grid);

/// Radial component of grad (-Delta)^{-s} Phi + beta y Phi^{2-m}; rising or
/// compact profile (compact radii must lie inside the support). m != 2.
ResidualReport residual_fpme3(const RadialProfile& p, double beta, double s, double m,
                              const std::vector<double>& grid);

/// div(Phi^{m-1} grad (-Delta)^{-s} Phi) + alpha Phi + beta y.grad Phi for a
/// rising profile: the FPME3 profile equation before integration, valid for
/// any (alpha, beta).
ResidualReport residual_fpme3_divergence(const RadialProfile& p, double alpha, double beta, double s, double m,
                                         const std::vector<double>& grid);

/// Profile residual of a catalog solution with its own exponents. First-kind
/// families use the mass-conserving form when alpha = N beta and fall back to
/// the general three-term equation otherwise.
ResidualReport residual_profile(const SelfSimilarSolution& sol, const std::vector<double>& grid);

/// u_t + (-Delta)^s u^m (FPME1) or u_t - div(u^{m-1} grad (-Delta)^{-s} u)
/// (FPME3) at the given (|x|, t) points; u_t by the five-point central
/// difference with step dt (needs t - 2dt inside the time interval).
/// Each point is normalized by the largest of |u_t|, |spatial term| and the
/// natural rate |u|/t (|u|/(T-t) for extinction solutions), so isolated zeros
/// of u_t do not inflate the relative residual.
ResidualReport residual_spacetime(const SelfSimilarSolution& sol, const std::vector<std::pair<double, double>>& points,
                                  double dt);

struct IdentityVerdict {
  bool identical = false;
  int order = 0;  // first differing series order when not identical
};

/// Compares the first K series coefficients of 2F1(a1, b1; c; x) and 2F1(a2, b2; c; x).
IdentityVerdict hyper_identity_check(const Hyper2F1Spec& f1, const Hyper2F1Spec& f2, int K = 8);

struct NonexistenceResult {
  double min_norm = 0.0;  // smallest normalized residual found
  double q = 0.0;         // minimizer
  double lambda = 0.0;
  int evaluations = 0;
};

/// Minimizes the FPME3 residual of lambda (R^2 - |y|^2)_+^q over
/// q in [1e-3, 20] and lambda in [1e-6, 1e6], with R = 1 and
/// beta = 1/(N(m-1)+2-2s), on 40 log-spaced radii in [r_lo, r_hi].
NonexistenceResult nonexistence_search(int N, double s, double m, double r_lo = 0.01, double r_hi = 0.5);

}  // namespace fpme
