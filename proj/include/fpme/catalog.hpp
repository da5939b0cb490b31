#pragma once

#include <limits>
#include <optional>
#include <string>

#include <json.hpp>

#include "fpme/fraclap.hpp"

// Explicit self-similar solutions of
//   FPME1: u_t + (-Delta)^s u^m = 0
//   FPME3: u_t = div(u^{m-1} grad (-Delta)^{-s} u)
// and the two very singular solutions of FPME1.

namespace fpme {

enum class Family {
  fpme1_mass_conserving,
  fpme1_extinction,
  fpme1_infinite_mass,
  fpme3_mass_conserving,
  vss_extinction,
  vss_growing,
};

enum class Equation { fpme1, fpme3 };

enum class TimeAnchor {
  origin,      // u = t^{-alpha} Phi(x t^{-beta}), t > 0
  extinction,  // u = (T - t)^{alpha} Phi(x (T - t)^{beta}), t < T
};

/// Short tags used on the command line and in JSON: fpme1-mc, fpme1-ext,
/// fpme1-im, fpme3-mc, vss-ext, vss-grow.
std::string to_string(Family f);
Family family_from_string(const std::string& tag);

Equation equation_of(Family f);
bool is_vss(Family f);

/// Critical exponents m_c = (N - 2s)_+ / N and m_1 = N / (N + 2s).
double critical_m(int N, double s);
double m_one(int N, double s);

struct SelfSimilarSolution {
  static constexpr double unset = std::numeric_limits<double>::quiet_NaN();

  Family family = Family::fpme1_mass_conserving;
  int N = 1;
  double s = 0.5;
  double m = 1.0;
  double q = 1.0;      // profile exponent; a VSS decays as |x|^{-2q} with q = s/(1-m)
  double alpha = 1.0;  // time exponent
  double beta = 1.0;   // space exponent
  double lambda = unset;
  double R = unset;
  double C = unset;    // VSS amplitude
  TimeAnchor anchor = TimeAnchor::origin;
  double T = 0.0;      // extinction time when anchor == extinction

  bool has_constants() const;
  Equation equation() const { return equation_of(family); }
  /// Barenblatt profile lambda (R^2 + |y|^2)^{-q}; throws for a VSS or unset constants.
  RadialProfile profile() const;
};

/// Exponents (m, q, alpha, beta) for one of the four explicit families; lambda
/// and R are left unset. Throws ErrorCode::domain when the family is empty for (N, s).
SelfSimilarSolution make_family(Family family, int N, double s);

/// A very singular solution C (T - t)^{1/(1-m)} |x|^{-2s/(1-m)} (extinction,
/// 0 < m < m_c) or C t^{1/(1-m)} |x|^{-2s/(1-m)} (growing, m_c < m < N/(N+2s)).
/// C is found by a scalar root solve of the separated equation.
SelfSimilarSolution make_vss(Family family, int N, double s, double m, double T = 1.0);

/// (-Delta)^s |x|^{-p} = riesz_power_constant(p) |x|^{-p-2s} for 0 < p < N, p != N - 2s.
double riesz_power_constant(int N, double s, double p);

/// How to pin the free constants of a family.
///
/// Mass-conserving families take either the mass or the radius R. The
/// extinction family takes T and either the initial mass M0, the radius, or a
/// consistent (lambda, R) pair. The infinite-mass family takes R (default 1).
struct ConstantSpec {
  std::optional<double> mass;
  std::optional<double> radius;
  std::optional<double> lambda;
  double T = 1.0;
};

SelfSimilarSolution fix_constants(SelfSimilarSolution sol, const ConstantSpec& spec);

/// Relative defect of the family's algebraic (lambda, R) constraint.
double constraint_defect(const SelfSimilarSolution& sol);

/// Integral of lambda (R^2 + |y|^2)^{-q} over R^N; +inf when q <= N/2.
double profile_mass(const RadialProfile& p);

/// Mass of the profile Phi (the conserved mass for first-kind families); +inf
/// for the infinite-mass family and for a VSS.
double mass(const SelfSimilarSolution& sol);

/// Mass of u(., t).
double mass_at(const SelfSimilarSolution& sol, double t);

/// u at radius |x| = r and time t.
double evaluate(const SelfSimilarSolution& sol, double r, double t);

/// Algebraic-constraint right-hand sides, exposed for the residual and CLI.
struct FamilyConstraint {
  double lambda_power;  // exponent of lambda
  double R_power;       // exponent of R
  double rhs;           // lambda^{lambda_power} R^{R_power} = rhs
};
FamilyConstraint family_constraint(const SelfSimilarSolution& sol);

nlohmann::json to_json(const SelfSimilarSolution& sol);
SelfSimilarSolution solution_from_json(const nlohmann::json& j);

}  // namespace fpme
