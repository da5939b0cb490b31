#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fpme/catalog.hpp"

// Series re-derivation of the admissible exponents from the gap function
//   g(r) = 2F1(mq+s, N/2+s; N/2; -r^2) - (1+r^2)^{-q} - bt r d/dr (1+r^2)^{-q},
// bt = beta/alpha, whose Taylor coefficients g_0, g_2, ... must all vanish.

namespace fpme {

struct GapSeries {
  int N = 1;
  double s = 0.5, m = 1.0, q = 1.0, beta_t = 0.0;
  std::vector<double> g;  // g[k] is the coefficient of r^{2k}

  double coefficient(int order) const;  // order = 2k
  /// max |g_{2k}| for 1 <= k <= K.
  double max_abs(int K) const;
};

/// Exact Taylor coefficients g_0 .. g_{2K} from Pochhammer products.
GapSeries gap_coefficients(int N, double s, double m, double q, double beta_t, int K = 4);

/// The m annihilating g_2 (g_2 is affine in m; solved from two evaluations).
double solve_m(int N, double s, double q, double beta_t);

/// The nonzero q annihilating g_4 once m = solve_m(q) is substituted; g_4 is
/// then q times an affine function of q, solved from two evaluations.
double solve_q(int N, double s, double beta_t);

/// Printed closed forms of the two solves, for cross-checking.
double closed_form_m(int N, double s, double q, double beta_t);
double closed_form_q(int N, double s, double beta_t);

enum class BetaCaseKind { extinction, first_kind, rejected, infinite_mass, absent };

const char* to_string(BetaCaseKind k);

struct BetaCase {
  BetaCaseKind kind = BetaCaseKind::absent;
  double beta_t = 0.0;  // NaN when absent
  bool admissible = false;
  std::string reason;  // why a case is rejected or inadmissible
  double m = 0.0, q = 0.0, alpha = 0.0, beta = 0.0;
  GapSeries series;  // at the assembled (m, q)
};

/// The four roots bt = 0, 1/N, s/N, 1/(N+2s-2) of the case split, classified.
std::vector<BetaCase> beta_cases(int N, double s);

/// Zeros of g_6 outside the case split: bt = -1/2 (q = -1) and
/// bt = s/(N+2-2s) (q = 0). Classified like beta_cases, never admissible.
std::vector<BetaCase> extra_g6_roots(int N, double s);

/// g_6 at the assembled (m(bt), q(bt)).
double g6_along(int N, double s, double beta_t);

/// Sign changes of g_6 along bt in [lo, hi] sampled at n points, refined by
/// bisection; intervals containing a pole of q(bt) are skipped.
std::vector<double> g6_zero_scan(int N, double s, double lo, double hi, int n);

/// Assembles the solution for a surviving case: alpha = 1/(1-m), beta = 0 for
/// bt = 0 (extinction), otherwise beta = sigma/((m-1)/bt + 2s), alpha = beta/bt
/// with sigma = +1 (both forward-time cases). Throws for rejected cases.
SelfSimilarSolution rederive_family(int N, double s, BetaCaseKind kind);

/// Inputs, coefficients, roots, classifications and assembled families.
nlohmann::json derivation_trace(int N, double s);

}  // namespace fpme
