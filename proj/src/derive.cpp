#include "fpme/derive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fpme/error.hpp"

namespace fpme {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

// Denominator of q(bt); q has a pole where it vanishes.
double q_denominator(int N, double s, double bt) {
  const double n = N;
  return n * n * bt * bt + 2.0 * n * bt * bt * s + 2.0 * n * bt * bt - 4.0 * bt * s - s;
}

double g4_over_q(int N, double s, double bt, double q) {
  const double m = solve_m(N, s, q, bt);
  return gap_coefficients(N, s, m, q, bt, 2).g[2] / q;
}

void assemble(BetaCase& c, int N, double s) {
  c.q = solve_q(N, s, c.beta_t);
  c.m = solve_m(N, s, c.q, c.beta_t);
  c.series = gap_coefficients(N, s, c.m, c.q, c.beta_t, 4);
}

}  // namespace

double GapSeries::coefficient(int order) const {
  require(order >= 0 && order % 2 == 0 && order / 2 < static_cast<int>(g.size()), ErrorCode::domain,
          "gap series has even coefficients up to order " + std::to_string(2 * (static_cast<int>(g.size()) - 1)));
  return g[order / 2];
}

double GapSeries::max_abs(int K) const {
  double v = 0.0;
  for (int k = 1; k <= K && k < static_cast<int>(g.size()); ++k) v = std::max(v, std::abs(g[k]));
  return v;
}

GapSeries gap_coefficients(int N, double s, double m, double q, double beta_t, int K) {
  require(N >= 1 && K >= 1, ErrorCode::domain, "gap series needs N >= 1 and K >= 1");
  const double a = m * q + s, b = 0.5 * N + s, c = 0.5 * N;
  GapSeries out{N, s, m, q, beta_t, std::vector<double>(K + 1)};
  // hyp_k = (a)_k (b)_k / ((c)_k k!), bin_k = (q)_k / k!, built as running products.
  double hyp = 1.0, bin = 1.0, sign = 1.0;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) {
      hyp *= (a + k - 1) * (b + k - 1) / ((c + k - 1) * k);
      bin *= (q + k - 1) / k;
      sign = -sign;
    }
    // Fused evaluation keeps the cancellation between the two parts to one rounding.
    out.g[k] = sign * std::fma(-bin, 1.0 + 2.0 * k * beta_t, hyp);
  }
  return out;
}

double solve_m(int N, double s, double q, double beta_t) {
  require(std::abs(q) > 1e-300, ErrorCode::parameter, "solve_m is degenerate at q = 0");
  auto g2 = [&](double m) { return gap_coefficients(N, s, m, q, beta_t, 1).g[1]; };
  // Affine in m: one secant step from (0, 1), then one more around the estimate
  // so that the final step is short and rounding is not extrapolated.
  const double g0 = g2(0.0), g1 = g2(1.0);
  require(g1 != g0, ErrorCode::parameter, "g_2 does not depend on m");
  double m = -g0 / (g1 - g0);
  const double h = 1e-3 * std::max(1.0, std::abs(m));
  const double a = g2(m), b = g2(m + h);
  if (b != a) m -= a * h / (b - a);
  return m + 0.0;
}

double solve_q(int N, double s, double beta_t) {
  require(std::abs(q_denominator(N, s, beta_t)) > 1e-14, ErrorCode::parameter,
          "q is undetermined: the q^2 coefficient of g_4 vanishes at bt = " + fmt(beta_t));
  const double h1 = g4_over_q(N, s, beta_t, 1.0), h2 = g4_over_q(N, s, beta_t, 2.0);
  double q = 1.0 - h1 / (h2 - h1);
  if (std::abs(q) > 1e-300) {
    const double h = 1e-3 * std::abs(q);
    const double a = g4_over_q(N, s, beta_t, q), b = g4_over_q(N, s, beta_t, q + h);
    if (b != a) q -= a * h / (b - a);
  }
  return q;
}

double closed_form_m(int N, double s, double q, double beta_t) {
  const double n = N;
  return (2.0 * beta_t * q * n + n * q - n * s - 2.0 * s * s) / (q * (n + 2.0 * s));
}

double closed_form_q(int N, double s, double beta_t) {
  const double n = N, b = beta_t;
  return 0.5 * (n + 2.0 * s) * (n * b - 2.0 * b * s + 2.0 * b - s) / q_denominator(N, s, b);
}

const char* to_string(BetaCaseKind k) {
  switch (k) {
    case BetaCaseKind::extinction:
      return "extinction";
    case BetaCaseKind::first_kind:
      return "first-kind";
    case BetaCaseKind::rejected:
      return "rejected";
    case BetaCaseKind::infinite_mass:
      return "infinite-mass";
    case BetaCaseKind::absent:
      return "absent";
  }
  return "unknown";
}

std::vector<BetaCase> beta_cases(int N, double s) {
  require(N >= 1, ErrorCode::domain, "dimension N must be >= 1");
  require(s > 0.0 && s < 1.0, ErrorCode::domain, "order s must lie in (0, 1)");
  std::vector<BetaCase> out;

  BetaCase ext;
  ext.kind = BetaCaseKind::extinction;
  ext.beta_t = 0.0;
  assemble(ext, N, s);
  ext.beta = 0.0;
  ext.alpha = 1.0 / (1.0 - ext.m);  // positive root: decay towards T
  ext.admissible = ext.m > 0.0;
  if (!ext.admissible) ext.reason = "m = " + fmt(ext.m) + " <= 0 (needs N > 2s)";
  out.push_back(ext);

  BetaCase first;
  first.kind = BetaCaseKind::first_kind;
  first.beta_t = 1.0 / N;
  assemble(first, N, s);
  first.beta = 1.0 / ((first.m - 1.0) / first.beta_t + 2.0 * s);
  first.alpha = first.beta / first.beta_t;
  first.admissible = true;
  first.reason = "alpha = N beta: the mass-conserving family";
  out.push_back(first);

  BetaCase rej;
  rej.kind = BetaCaseKind::rejected;
  rej.beta_t = s / N;
  assemble(rej, N, s);
  rej.admissible = false;
  rej.reason = "q = " + fmt(rej.q) + " < 0: profile grows at infinity";
  out.push_back(rej);

  BetaCase im;
  im.kind = BetaCaseKind::infinite_mass;
  const double d = N + 2.0 * s - 2.0;
  if (std::abs(d) < 1e-14) {
    im.kind = BetaCaseKind::absent;
    im.beta_t = kNaN;
    im.reason = "N + 2s - 2 = 0: root at infinity";
  } else {
    im.beta_t = 1.0 / d;
    assemble(im, N, s);
    if (im.q <= 0.0) {
      im.reason = "q = " + fmt(im.q) + " <= 0";
    } else if (im.m <= 0.0) {
      im.reason = "m = " + fmt(im.m) + " <= 0";
    } else {
      im.beta = 1.0 / ((im.m - 1.0) / im.beta_t + 2.0 * s);
      im.alpha = im.beta / im.beta_t;
      im.admissible = true;
      im.reason = "q = N/2 + s - 1 < N/2: infinite mass";
    }
  }
  out.push_back(im);
  return out;
}

std::vector<BetaCase> extra_g6_roots(int N, double s) {
  std::vector<BetaCase> out;
  BetaCase half;
  half.kind = BetaCaseKind::rejected;
  half.beta_t = -0.5;
  assemble(half, N, s);
  half.reason = "factor 2 bt + 1 of g_6: q = " + fmt(half.q) + " < 0";
  out.push_back(half);

  BetaCase zero;
  zero.kind = BetaCaseKind::rejected;
  zero.beta_t = s / (N + 2.0 - 2.0 * s);
  zero.q = 0.0;
  zero.m = kNaN;
  zero.reason = "numerator factor of q(bt): q = 0, m undefined";
  out.push_back(zero);
  return out;
}

double g6_along(int N, double s, double beta_t) {
  const double q = solve_q(N, s, beta_t);
  const double m = solve_m(N, s, q, beta_t);
  return gap_coefficients(N, s, m, q, beta_t, 3).g[3];
}

std::vector<double> g6_zero_scan(int N, double s, double lo, double hi, int n) {
  require(n >= 2 && hi > lo, ErrorCode::precondition, "bad scan range");
  std::vector<double> roots;
  auto safe = [&](double b) {
    try {
      return g6_along(N, s, b);
    } catch (const Error&) {
      return kNaN;
    }
  };
  double b0 = lo, f0 = safe(lo);
  for (int i = 1; i < n; ++i) {
    const double b1 = lo + (hi - lo) * i / (n - 1);
    const double f1 = safe(b1);
    const bool pole = q_denominator(N, s, b0) * q_denominator(N, s, b1) <= 0.0;
    if (std::isfinite(f0) && std::isfinite(f1) && !pole) {
      if (f0 == 0.0) {
        roots.push_back(b0);
      } else if (f0 * f1 < 0.0) {
        double a = b0, b = b1, fa = f0;
        for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
          const double c = 0.5 * (a + b), fc = safe(c);
          if (!std::isfinite(fc)) break;
          if ((fc < 0.0) == (fa < 0.0)) {
            a = c;
            fa = fc;
          } else {
            b = c;
          }
        }
        roots.push_back(0.5 * (a + b));
      }
    }
    b0 = b1;
    f0 = f1;
  }
  return roots;
}

SelfSimilarSolution rederive_family(int N, double s, BetaCaseKind kind) {
  for (const BetaCase& c : beta_cases(N, s)) {
    if (c.kind != kind) continue;
    require(c.admissible, ErrorCode::infeasible,
            std::string("case ") + to_string(kind) + " is not admissible: " + c.reason);
    SelfSimilarSolution sol;
    sol.N = N;
    sol.s = s;
    sol.m = c.m;
    sol.q = c.q;
    sol.alpha = c.alpha;
    sol.beta = c.beta;
    switch (kind) {
      case BetaCaseKind::extinction:
        sol.family = Family::fpme1_extinction;
        sol.anchor = TimeAnchor::extinction;
        sol.T = 1.0;
        break;
      case BetaCaseKind::first_kind:
        sol.family = Family::fpme1_mass_conserving;
        break;
      case BetaCaseKind::infinite_mass:
        sol.family = Family::fpme1_infinite_mass;
        break;
      default:
        break;
    }
    return sol;
  }
  fail(ErrorCode::infeasible, std::string("case ") + to_string(kind) + " does not yield a family");
}

nlohmann::json derivation_trace(int N, double s) {
  auto num = [](double x) -> nlohmann::json { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
  auto describe = [&](const BetaCase& c) {
    nlohmann::json j;
    j["kind"] = to_string(c.kind);
    j["beta_tilde"] = num(c.beta_t);
    j["admissible"] = c.admissible;
    j["reason"] = c.reason;
    j["m"] = num(c.m);
    j["q"] = num(c.q);
    if (c.admissible) {
      j["alpha"] = c.alpha;
      j["beta"] = c.beta;
      const auto sol = rederive_family(N, s, c.kind);
      j["family"] = to_string(sol.family);
      j["scaling_relation"] = c.alpha * (c.m - 1.0) + 2.0 * s * c.beta;
    }
    if (!c.series.g.empty()) {
      nlohmann::json g = nlohmann::json::object();
      for (std::size_t k = 0; k < c.series.g.size(); ++k) g["g" + std::to_string(2 * k)] = c.series.g[k];
      j["coefficients"] = g;
      j["max_abs_g2_to_g6"] = c.series.max_abs(3);
    }
    return j;
  };
  nlohmann::json j;
  j["format"] = "fpme-derivation";
  j["version"] = 1;
  j["inputs"] = {{"N", N}, {"s", s}};
  j["gap_function"] = "2F1(mq+s, N/2+s; N/2; -r^2) - (1+r^2)^{-q} - bt r d/dr (1+r^2)^{-q}";
  j["coefficient_rule"] =
      "g_{2n} = (-1)^n [ (mq+s)_n (N/2+s)_n / ((N/2)_n n!) - (q)_n/n! (1 + 2 n bt) ]";
  j["case_split"] = "bt (N bt - 1)(N bt - s)(N bt + 2 bt s - 2 bt - 1) = 0";
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : beta_cases(N, s)) cases.push_back(describe(c));
  j["cases"] = cases;
  nlohmann::json extra = nlohmann::json::array();
  for (const auto& c : extra_g6_roots(N, s)) extra.push_back(describe(c));
  j["extra_g6_roots"] = extra;
  return j;
}

}  // namespace fpme
