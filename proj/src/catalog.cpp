#include "fpme/catalog.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "fpme/error.hpp"
#include "fpme/specfun.hpp"

namespace fpme {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

struct Tag {
  Family family;
  const char* name;
};

constexpr Tag kTags[] = {
    {Family::fpme1_mass_conserving, "fpme1-mc"}, {Family::fpme1_extinction, "fpme1-ext"},
    {Family::fpme1_infinite_mass, "fpme1-im"},   {Family::fpme3_mass_conserving, "fpme3-mc"},
    {Family::vss_extinction, "vss-ext"},         {Family::vss_growing, "vss-grow"},
};

void check_order(int N, double s) {
  require(N >= 1, ErrorCode::domain, "dimension N must be >= 1, got " + std::to_string(N));
  require(s > 0.0 && s < 1.0, ErrorCode::domain, "order s must lie in (0, 1), got " + fmt(s));
}

double json_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return SelfSimilarSolution::unset;
  return j.at(key).get<double>();
}

}  // namespace

std::string to_string(Family f) {
  for (const auto& t : kTags)
    if (t.family == f) return t.name;
  return "unknown";
}

Family family_from_string(const std::string& tag) {
  for (const auto& t : kTags)
    if (tag == t.name) return t.family;
  fail(ErrorCode::parse, "unknown family '" + tag +
                             "' (expected fpme1-mc, fpme1-ext, fpme1-im, fpme3-mc, vss-ext or vss-grow)");
}

Equation equation_of(Family f) { return f == Family::fpme3_mass_conserving ? Equation::fpme3 : Equation::fpme1; }

bool is_vss(Family f) { return f == Family::vss_extinction || f == Family::vss_growing; }

double critical_m(int N, double s) { return std::max(N - 2.0 * s, 0.0) / N; }

double m_one(int N, double s) { return N / (N + 2.0 * s); }

bool SelfSimilarSolution::has_constants() const {
  if (is_vss(family)) return std::isfinite(C);
  return std::isfinite(lambda) && std::isfinite(R);
}

RadialProfile SelfSimilarSolution::profile() const {
  require(!is_vss(family), ErrorCode::precondition, "a very singular solution has no Barenblatt profile");
  require(has_constants(), ErrorCode::precondition, "lambda and R are not set; call fix_constants first");
  return RadialProfile{ProfileShape::rising, q, R, lambda, N};
}

SelfSimilarSolution make_family(Family family, int N, double s) {
  check_order(N, s);
  SelfSimilarSolution sol;
  sol.family = family;
  sol.N = N;
  sol.s = s;
  const double n = N;
  switch (family) {
    case Family::fpme1_mass_conserving:
      sol.m = (n + 2.0 - 2.0 * s) / (n + 2.0 * s);
      sol.q = n / 2.0 + s;
      sol.beta = 1.0 / (n * (sol.m - 1.0) + 2.0 * s);
      sol.alpha = n * sol.beta;
      break;
    case Family::fpme1_extinction:
      require(n > 2.0 * s, ErrorCode::domain,
              "fpme1-ext needs N > 2s so that m = (N-2s)/(N+2s) > 0; got N = " + std::to_string(N) +
                  ", s = " + fmt(s));
      sol.m = (n - 2.0 * s) / (n + 2.0 * s);
      sol.q = n / 2.0 + s;
      sol.alpha = (n + 2.0 * s) / (4.0 * s);
      sol.beta = 0.0;
      sol.anchor = TimeAnchor::extinction;
      sol.T = 1.0;
      break;
    case Family::fpme1_infinite_mass:
      require(n + 2.0 * s - 2.0 > 0.0, ErrorCode::domain,
              "fpme1-im needs N + 2s - 2 > 0; got N = " + std::to_string(N) + ", s = " + fmt(s));
      require(n > 2.0 * s, ErrorCode::domain,
              "fpme1-im needs N > 2s so that m = (N-2s)/(N+2s-2) > 0; got N = " + std::to_string(N) +
                  ", s = " + fmt(s));
      sol.m = (n - 2.0 * s) / (n + 2.0 * s - 2.0);
      sol.q = n / 2.0 + s - 1.0;
      sol.alpha = (n + 2.0 * s - 2.0) / (2.0 * (1.0 - s));
      sol.beta = 1.0 / (2.0 * (1.0 - s));
      break;
    case Family::fpme3_mass_conserving:
      require(n + 6.0 * s - 2.0 > 0.0, ErrorCode::domain,
              "fpme3-mc needs N + 6s - 2 > 0 so that m > 0; got N = " + std::to_string(N) + ", s = " + fmt(s));
      sol.m = (n + 6.0 * s - 2.0) / (n + 2.0 * s);
      sol.q = n / 2.0 + s;
      sol.beta = 1.0 / (n * (sol.m - 1.0) + 2.0 - 2.0 * s);
      sol.alpha = n * sol.beta;
      break;
    case Family::vss_extinction:
    case Family::vss_growing:
      fail(ErrorCode::precondition, "very singular solutions need m; use make_vss");
  }
  return sol;
}

double riesz_power_constant(int N, double s, double p) {
  require(p > 0.0 && p < N, ErrorCode::domain, "power must satisfy 0 < p < N, got p = " + fmt(p));
  return std::pow(2.0, 2.0 * s) * gamma(0.5 * (p + 2.0 * s)) * gamma(0.5 * (N - p)) *
         rgamma(0.5 * p) * rgamma(0.5 * (N - p - 2.0 * s));
}

SelfSimilarSolution make_vss(Family family, int N, double s, double m, double T) {
  check_order(N, s);
  require(is_vss(family), ErrorCode::precondition, "make_vss needs vss-ext or vss-grow");
  const double mc = critical_m(N, s);
  SelfSimilarSolution sol;
  sol.family = family;
  sol.N = N;
  sol.s = s;
  sol.m = m;
  sol.beta = 0.0;
  if (family == Family::vss_extinction) {
    require(m > 0.0 && m < mc, ErrorCode::domain,
            "vss-ext needs 0 < m < m_c = " + fmt(mc) + ", got m = " + fmt(m));
    require(T > 0.0, ErrorCode::domain, "extinction time must be positive");
    sol.alpha = 1.0 / (1.0 - m);
    sol.anchor = TimeAnchor::extinction;
    sol.T = T;
  } else {
    const double upper = m_one(N, s);
    require(m > mc && m < upper, ErrorCode::domain,
            "vss-grow needs m_c = " + fmt(mc) + " < m < N/(N+2s) = " + fmt(upper) + ", got m = " + fmt(m));
    sol.alpha = -1.0 / (1.0 - m);
    sol.anchor = TimeAnchor::origin;
  }
  sol.q = s / (1.0 - m);

  // Separated form: u_t = sigma C/(1-m) tau^{m/(1-m)} |x|^{-2q} and
  // (-Delta)^s u^m = C^m K tau^{m/(1-m)} |x|^{-2q}, so with x = tau = 1 the
  // equation becomes sigma C^{1-m}/(1-m) + K = 0 in c = log C.
  const double K = riesz_power_constant(N, s, 2.0 * m * sol.q);
  const double sigma = family == Family::vss_extinction ? -1.0 : 1.0;
  require(sigma * K < 0.0, ErrorCode::infeasible,
          "separated equation has no positive amplitude for these (N, s, m)");
  auto f = [&](double c) { return sigma * std::exp((1.0 - m) * c) / (1.0 - m) + K; };
  double lo = -1.0, hi = 1.0;
  while (f(lo) * f(hi) > 0.0) {
    lo *= 2.0;
    hi *= 2.0;
    require(hi < 1e4, ErrorCode::convergence, "VSS amplitude bracket not found");
  }
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  sol.C = std::exp(0.5 * (a + b));
  return sol;
}

FamilyConstraint family_constraint(const SelfSimilarSolution& sol) {
  const double n = sol.N, s = sol.s, m = sol.m;
  switch (sol.family) {
    case Family::fpme1_mass_conserving:
      return {1.0 - m, 2.0 - 2.0 * s,
              std::pow(2.0, 2.0 * s - 1.0) * gamma(n / 2 + s) / gamma(n / 2 + 1.0 - s) / sol.beta};
    case Family::fpme3_mass_conserving:
      return {1.0 - m, 2.0 * s, std::pow(2.0, 1.0 - 2.0 * s) * gamma(n / 2 - s + 1.0) / gamma(n / 2 + s) / sol.beta};
    case Family::fpme1_extinction:
      return {m - 1.0, 2.0 * s, sol.alpha * std::pow(2.0, -2.0 * s) * gamma(n / 2 - s) / gamma(n / 2 + s)};
    case Family::fpme1_infinite_mass:
      return {1.0 - m, 2.0 - 2.0 * s, std::pow(2.0, 2.0 * s) / sol.alpha * gamma(n / 2 + s) / gamma(n / 2 - s)};
    default:
      fail(ErrorCode::precondition, "very singular solutions carry no (lambda, R) constraint");
  }
}

double constraint_defect(const SelfSimilarSolution& sol) {
  const auto c = family_constraint(sol);
  const double lhs = std::pow(sol.lambda, c.lambda_power) * std::pow(sol.R, c.R_power);
  return std::abs(lhs - c.rhs) / std::abs(c.rhs);
}

double profile_mass(const RadialProfile& p) {
  require(p.shape == ProfileShape::rising, ErrorCode::precondition, "profile_mass handles rising profiles");
  if (p.q <= 0.5 * p.N) return std::numeric_limits<double>::infinity();
  return p.lambda * std::pow(kPi, 0.5 * p.N) * std::pow(p.R, p.N - 2.0 * p.q) * gamma(p.q - 0.5 * p.N) *
         rgamma(p.q);
}

SelfSimilarSolution fix_constants(SelfSimilarSolution sol, const ConstantSpec& spec) {
  require(!is_vss(sol.family), ErrorCode::precondition, "very singular solutions have no free constants");
  const auto c = family_constraint(sol);
  const int N = sol.N;
  const double q = sol.q;
  const double unit_mass = std::pow(kPi, 0.5 * N) * gamma(q - 0.5 * N) * rgamma(q);  // lambda = R = 1
  const bool extinction = sol.family == Family::fpme1_extinction;
  if (extinction) {
    require(spec.T > 0.0, ErrorCode::domain, "extinction time T must be positive");
    sol.T = spec.T;
  }
  if (spec.mass) {
    require(sol.family != Family::fpme1_infinite_mass, ErrorCode::infeasible,
            "fpme1-im has infinite mass; pin it with a radius instead");
    require(*spec.mass > 0.0, ErrorCode::domain, "mass must be positive");
    require(!spec.radius && !spec.lambda, ErrorCode::infeasible,
            "mass and radius/lambda together over-determine the constants");
    // mass = lambda * unit_mass * R^{N-2q} (times T^alpha for the extinction
    // family), combined with lambda^a R^b = rhs.
    const double mu = *spec.mass / (unit_mass * (extinction ? std::pow(sol.T, sol.alpha) : 1.0));
    const double e = N - 2.0 * q;  // lambda = mu R^{-e}
    const double pw = c.R_power - e * c.lambda_power;
    require(std::abs(pw) > 1e-14, ErrorCode::infeasible, "mass does not determine R for this family");
    sol.R = std::pow(c.rhs / std::pow(mu, c.lambda_power), 1.0 / pw);
    sol.lambda = mu * std::pow(sol.R, -e);
    return sol;
  }
  const double R = spec.radius.value_or(1.0);
  require(R > 0.0, ErrorCode::domain, "radius must be positive");
  if (spec.lambda) {
    require(*spec.lambda > 0.0, ErrorCode::domain, "lambda must be positive");
    sol.lambda = *spec.lambda;
    sol.R = R;
    require(constraint_defect(sol) <= 1e-10, ErrorCode::infeasible,
            "(lambda, R) violate the family constraint lambda^" + fmt(c.lambda_power) + " R^" + fmt(c.R_power) +
                " = " + fmt(c.rhs));
    return sol;
  }
  if (std::abs(c.lambda_power) < 1e-14) {
    // m = 1: the constraint fixes R alone and leaves lambda free.
    sol.R = std::pow(c.rhs, 1.0 / c.R_power);
    require(!spec.radius || std::abs(sol.R - R) <= 1e-12 * sol.R, ErrorCode::infeasible,
            "for m = 1 the constraint fixes R = " + fmt(sol.R));
    sol.lambda = 1.0;
    return sol;
  }
  sol.R = R;
  sol.lambda = std::pow(c.rhs / std::pow(R, c.R_power), 1.0 / c.lambda_power);
  return sol;
}

double mass(const SelfSimilarSolution& sol) {
  if (is_vss(sol.family)) return std::numeric_limits<double>::infinity();
  return profile_mass(sol.profile());
}

double mass_at(const SelfSimilarSolution& sol, double t) {
  const double M = mass(sol);
  if (!std::isfinite(M)) return M;
  if (sol.anchor == TimeAnchor::extinction) {
    require(t <= sol.T, ErrorCode::domain, "time beyond the extinction time");
    return std::pow(sol.T - t, sol.alpha - sol.N * sol.beta) * M;
  }
  require(t > 0.0, ErrorCode::domain, "forward families live on t > 0");
  return std::pow(t, sol.N * sol.beta - sol.alpha) * M;
}

double evaluate(const SelfSimilarSolution& sol, double r, double t) {
  require(sol.has_constants(), ErrorCode::precondition, "solution constants are not set");
  r = std::abs(r);
  double tau;
  if (sol.anchor == TimeAnchor::extinction) {
    require(t >= 0.0 && t <= sol.T, ErrorCode::domain,
            "extinction solutions live on 0 <= t <= T = " + fmt(sol.T) + ", got t = " + fmt(t));
    tau = sol.T - t;
    if (tau == 0.0) return 0.0;
  } else {
    require(t > 0.0, ErrorCode::domain, "forward solutions live on t > 0, got t = " + fmt(t));
    tau = 1.0 / t;  // t^{-alpha} Phi(x t^{-beta}) = tau^{alpha} Phi(x tau^{beta})
  }
  if (is_vss(sol.family)) {
    require(r > 0.0, ErrorCode::domain, "very singular solutions are singular at x = 0");
    return sol.C * std::pow(tau, sol.alpha) * std::pow(r, -2.0 * sol.q);
  }
  const double y = r * std::pow(tau, sol.beta);
  return std::pow(tau, sol.alpha) * sol.lambda * std::pow(sol.R * sol.R + y * y, -sol.q);
}

nlohmann::json to_json(const SelfSimilarSolution& sol) {
  auto num = [](double x) -> nlohmann::json { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
  nlohmann::json j;
  j["format"] = "fpme-solution";
  j["version"] = 1;
  j["family"] = to_string(sol.family);
  j["equation"] = sol.equation() == Equation::fpme1 ? "fpme1" : "fpme3";
  j["N"] = sol.N;
  j["s"] = sol.s;
  j["m"] = sol.m;
  j["q"] = sol.q;
  j["alpha"] = sol.alpha;
  j["beta"] = sol.beta;
  j["lambda"] = num(sol.lambda);
  j["R"] = num(sol.R);
  j["C"] = num(sol.C);
  j["anchor"] = {{"kind", sol.anchor == TimeAnchor::origin ? "origin" : "extinction"}, {"T", sol.T}};
  const double M = sol.has_constants() ? mass(sol) : SelfSimilarSolution::unset;
  j["mass"] = std::isinf(M) ? nlohmann::json("infinite") : num(M);
  return j;
}

SelfSimilarSolution solution_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", "") == "fpme-solution", ErrorCode::parse, "not an fpme-solution document");
    require(j.value("version", 0) == 1, ErrorCode::parse, "unsupported fpme-solution version");
    SelfSimilarSolution sol;
    sol.family = family_from_string(j.at("family").get<std::string>());
    sol.N = j.at("N").get<int>();
    sol.s = j.at("s").get<double>();
    sol.m = j.at("m").get<double>();
    sol.q = j.at("q").get<double>();
    sol.alpha = j.at("alpha").get<double>();
    sol.beta = j.at("beta").get<double>();
    sol.lambda = json_number(j, "lambda");
    sol.R = json_number(j, "R");
    sol.C = json_number(j, "C");
    const auto& a = j.at("anchor");
    sol.anchor = a.at("kind").get<std::string>() == "extinction" ? TimeAnchor::extinction : TimeAnchor::origin;
    sol.T = a.at("T").get<double>();
    return sol;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, std::string("malformed solution document: ") + e.what());
  }
}

}  // namespace fpme
