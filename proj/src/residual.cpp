#include "fpme/residual.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "fpme/error.hpp"

namespace fpme {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

// One residual sample: the terms of the equation at a point. The residual is
// their sum and the normalization their largest magnitude.
using Terms = std::vector<double>;

ResidualReport assemble(const std::vector<double>& grid, const std::function<Terms(double, std::size_t)>& terms) {
  ResidualReport rep;
  rep.grid = grid;
  rep.residual.resize(grid.size());
  rep.normalization.resize(grid.size());
  rep.flags.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      Terms t = terms(grid[i], i);
      double sum = 0.0, scale = 0.0;
      for (double v : t) {
        sum += v;
        scale = std::max(scale, std::abs(v));
      }
      rep.residual[i] = sum;
      rep.normalization[i] = scale;
      if (!std::isfinite(sum)) {
        rep.flags[i] = "non-finite term";
        rep.norm = std::numeric_limits<double>::infinity();
      } else if (scale > 0.0) {
        rep.norm = std::max(rep.norm, std::abs(sum) / scale);
      } else {
        rep.flags[i] = "all terms vanish";
      }
    } catch (const Error& e) {
      rep.residual[i] = std::numeric_limits<double>::quiet_NaN();
      rep.normalization[i] = std::numeric_limits<double>::quiet_NaN();
      rep.flags[i] = e.what();
      rep.norm = std::numeric_limits<double>::infinity();
    }
  }
  return rep;
}

void check_grid(const std::vector<double>& grid) {
  require(!grid.empty(), ErrorCode::precondition, "residual grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    require(grid[i] > grid[i - 1], ErrorCode::precondition, "residual grid must be strictly increasing");
  require(grid.front() >= 0.0, ErrorCode::precondition, "residual grid radii must be non-negative");
}

RadialProfile powered(const RadialProfile& p, double e) {
  RadialProfile out = p;
  out.q = p.q * e;
  out.lambda = std::pow(p.lambda, e);
  return out;
}

// (-Delta)^s of a rising profile, through the collapsed form when q = N/2 - s.
HyperField lap_rising(double s, const RadialProfile& p) {
  const FractionalOp op{s, p.N};
  if (std::abs(p.q - (0.5 * p.N - s)) <= 1e-12 * std::max(1.0, p.q)) return frac_lap_rising_special(op, p).field;
  return frac_lap_rising(op, p);
}

// div(u^{m-1} P') = G' + (N-1) G / r with G = u^{m-1} P', P = (-Delta)^{-s} u.
double fpme3_flux_divergence(const RadialProfile& u, double s, double m, double r) {
  const HyperField P = frac_lap_rising({-s, u.N}, u);
  const double um1 = std::pow(u(r), m - 1.0);
  if (r == 0.0) return u.N * um1 * P.second_derivative(0.0);
  const double dP = P.derivative(r);
  const double dum1 = (m - 1.0) * std::pow(u(r), m - 2.0) * u.derivative(r);
  return dum1 * dP + um1 * P.second_derivative(r) + (u.N - 1.0) * um1 * dP / r;
}

bool first_kind(const SelfSimilarSolution& sol) {
  return std::abs(sol.alpha - sol.N * sol.beta) <= 1e-14 * std::max(1.0, std::abs(sol.alpha));
}

}  // namespace

void ResidualReport::write_csv(std::ostream& os) const {
  os << "radius,residual,normalization\n";
  os << std::scientific << std::setprecision(16);
  for (std::size_t i = 0; i < grid.size(); ++i) os << grid[i] << ',' << residual[i] << ',' << normalization[i] << '\n';
}

std::vector<double> log_grid(double R, int n, double lo, double hi) {
  require(n >= 2 && lo > 0.0 && hi > lo && R > 0.0, ErrorCode::precondition, "bad log grid specification");
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g[i] = R * std::exp(a + (b - a) * i / (n - 1));
  return g;
}

ResidualReport residual_fpme1(const RadialProfile& p, double beta, double s, double m,
                              const std::vector<double>& grid) {
  validate(p);
  check_grid(grid);
  require(p.shape == ProfileShape::rising, ErrorCode::precondition, "residual_fpme1 needs a rising profile");
  require(m > 0.0, ErrorCode::parameter, "m must be positive");
  const HyperField lhs = lap_rising(s, powered(p, m));
  // div(y Phi) = lambda N R^{-2q} 2F1(q, N/2 + 1; N/2; -|y|^2/R^2)
  const HyperField div{p.lambda * p.N * std::pow(p.R, -2.0 * p.q),
                       {p.q, 0.5 * p.N + 1.0, 0.5 * p.N, ArgDomain::negative_axis},
                       p.R,
                       {}};
  return assemble(grid, [&](double r, std::size_t) { return Terms{lhs(r), -beta * div(r)}; });
}

ResidualReport residual_fpme1_secondkind(const RadialProfile& p, double alpha, double beta, double s, double m,
                                         const std::vector<double>& grid) {
  validate(p);
  check_grid(grid);
  require(p.shape == ProfileShape::rising, ErrorCode::precondition, "second-kind residual needs a rising profile");
  require(m > 0.0, ErrorCode::parameter, "m must be positive");
  const HyperField lhs = lap_rising(s, powered(p, m));
  return assemble(grid, [&](double r, std::size_t) {
    return Terms{lhs(r), -alpha * p(r), -beta * r * p.derivative(r)};
  });
}

ResidualReport residual_fpme3(const RadialProfile& p, double beta, double s, double m,
                              const std::vector<double>& grid) {
  validate(p);
  check_grid(grid);
  require(std::abs(m - 2.0) > 1e-12, ErrorCode::precondition, "FPME3 profile equation excludes m = 2");
  const FractionalOp inv{-s, p.N};
  if (p.shape == ProfileShape::rising) {
    const HyperField pot = frac_lap_rising(inv, p);
    return assemble(grid, [&](double r, std::size_t) {
      return Terms{pot.derivative(r), beta * r * std::pow(p(r), 2.0 - m)};
    });
  }
  require(grid.back() < p.R, ErrorCode::precondition, "compact residual radii must lie inside the support");
  return assemble(grid, [&](double r, std::size_t) {
    return Terms{inv_frac_lap_compact_derivative(inv, p, r), beta * r * std::pow(p(r), 2.0 - m)};
  });
}

ResidualReport residual_fpme3_divergence(const RadialProfile& p, double alpha, double beta, double s, double m,
                                         const std::vector<double>& grid) {
  validate(p);
  check_grid(grid);
  require(p.shape == ProfileShape::rising, ErrorCode::precondition, "divergence-form residual needs a rising profile");
  return assemble(grid, [&](double r, std::size_t) {
    return Terms{fpme3_flux_divergence(p, s, m, r), alpha * p(r), beta * r * p.derivative(r)};
  });
}

ResidualReport residual_profile(const SelfSimilarSolution& sol, const std::vector<double>& grid) {
  const RadialProfile p = sol.profile();
  switch (sol.family) {
    case Family::fpme1_mass_conserving:
      if (first_kind(sol)) return residual_fpme1(p, sol.beta, sol.s, sol.m, grid);
      return residual_fpme1_secondkind(p, sol.alpha, sol.beta, sol.s, sol.m, grid);
    case Family::fpme3_mass_conserving:
      if (first_kind(sol)) return residual_fpme3(p, sol.beta, sol.s, sol.m, grid);
      return residual_fpme3_divergence(p, sol.alpha, sol.beta, sol.s, sol.m, grid);
    case Family::fpme1_extinction:
    case Family::fpme1_infinite_mass:
      return residual_fpme1_secondkind(p, sol.alpha, sol.beta, sol.s, sol.m, grid);
    default:
      fail(ErrorCode::precondition, "no profile equation for a very singular solution");
  }
}

ResidualReport residual_spacetime(const SelfSimilarSolution& sol, const std::vector<std::pair<double, double>>& points,
                                  double dt) {
  require(sol.has_constants(), ErrorCode::precondition, "solution constants are not set");
  require(dt > 0.0, ErrorCode::precondition, "time step must be positive");
  require(!(is_vss(sol.family) && sol.equation() == Equation::fpme3), ErrorCode::precondition,
          "very singular solutions are FPME1 objects");
  std::vector<double> radii(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) radii[i] = points[i].first;

  // u(., t) as a rising profile: tau^alpha lambda (R^2 + r^2 tau^{2 beta})^{-q}
  // = lambda_t (R_t^2 + r^2)^{-q} with R_t = R tau^{-beta}.
  auto tau_of = [&](double t) { return sol.anchor == TimeAnchor::extinction ? sol.T - t : 1.0 / t; };
  auto at_time = [&](double t) {
    const double tau = tau_of(t);
    RadialProfile p = sol.profile();
    p.R = sol.R * std::pow(tau, -sol.beta);
    p.lambda = sol.lambda * std::pow(tau, sol.alpha - 2.0 * sol.beta * sol.q);
    return p;
  };

  ResidualReport rep = assemble(radii, [&](double r, std::size_t i) {
    const double t = points[i].second;
    require(sol.anchor == TimeAnchor::extinction ? (t - 2.0 * dt >= 0.0 && t + 2.0 * dt < sol.T) : t - 2.0 * dt > 0.0,
            ErrorCode::domain, "space-time point too close to the edge of the time interval (t = " + fmt(t) + ")");
    // Five-point central stencil, O(dt^4).
    const double ut = (evaluate(sol, r, t - 2.0 * dt) - 8.0 * evaluate(sol, r, t - dt) + 8.0 * evaluate(sol, r, t + dt) -
                       evaluate(sol, r, t + 2.0 * dt)) /
                      (12.0 * dt);
    if (is_vss(sol.family)) {
      const double tau = tau_of(t);
      const double p = 2.0 * sol.m * sol.q;
      const double lap = std::pow(sol.C, sol.m) * std::pow(tau, sol.alpha * sol.m) *
                         riesz_power_constant(sol.N, sol.s, p) * std::pow(r, -p - 2.0 * sol.s);
      return Terms{ut, lap};
    }
    const RadialProfile u = at_time(t);
    if (sol.equation() == Equation::fpme1) return Terms{ut, lap_rising(sol.s, powered(u, sol.m))(r)};
    return Terms{ut, -fpme3_flux_divergence(u, sol.s, sol.m, r)};
  });
  // Rescale by the natural rate |u| / (time to the anchor).
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(rep.residual[i])) continue;
    const double t = points[i].second;
    const double span = sol.anchor == TimeAnchor::extinction ? sol.T - t : t;
    const double rate = std::abs(evaluate(sol, radii[i], t)) / span;
    rep.normalization[i] = std::max(rep.normalization[i], rate);
    if (rep.normalization[i] > 0.0) rep.flags[i].clear();
  }
  rep.norm = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(rep.residual[i])) {
      rep.norm = std::numeric_limits<double>::infinity();
      continue;
    }
    if (rep.normalization[i] > 0.0) rep.norm = std::max(rep.norm, std::abs(rep.residual[i]) / rep.normalization[i]);
  }
  return rep;
}

IdentityVerdict hyper_identity_check(const Hyper2F1Spec& f1, const Hyper2F1Spec& f2, int K) {
  require(K >= 3, ErrorCode::precondition, "identity check needs K >= 3");
  require(std::abs(f1.c - f2.c) <= 1e-14 * std::max(1.0, std::abs(f1.c)), ErrorCode::precondition,
          "identity check compares functions with the same c");
  double c1 = 1.0, c2 = 1.0;
  for (int n = 0; n < K; ++n) {
    // coefficient of x^{n+1}
    c1 *= (f1.a + n) * (f1.b + n) / ((f1.c + n) * (n + 1.0));
    c2 *= (f2.a + n) * (f2.b + n) / ((f2.c + n) * (n + 1.0));
    if (std::abs(c1 - c2) > 1e-12 * std::max({1.0, std::abs(c1), std::abs(c2)})) return {false, n + 1};
  }
  return {true, 0};
}

NonexistenceResult nonexistence_search(int N, double s, double m, double r_lo, double r_hi) {
  require(m > 2.0, ErrorCode::precondition, "nonexistence search is for m > 2");
  require(0.5 * N > s, ErrorCode::precondition, "compact inverse formula needs N/2 > s");
  const double beta = 1.0 / (N * (m - 1.0) + 2.0 - 2.0 * s);
  require(r_lo > 0.0 && r_hi < 1.0 && r_lo < r_hi, ErrorCode::precondition, "search radii must lie in (0, R)");
  const auto grid = log_grid(1.0, 40, r_lo, r_hi);
  NonexistenceResult best;
  best.min_norm = std::numeric_limits<double>::infinity();
  auto eval = [&](double lq, double ll) {
    ++best.evaluations;
    RadialProfile p{ProfileShape::compact, std::exp(lq), 1.0, std::exp(ll), N};
    double v = residual_fpme3(p, beta, s, m, grid).norm;
    if (v < best.min_norm) {
      best.min_norm = v;
      best.q = p.q;
      best.lambda = p.lambda;
    }
    return v;
  };
  // Coarse scan over q in [1e-3, 20], lambda in [1e-6, 1e6], then a shrinking
  // compass search from the best few cells.
  const int nq = 48, nl = 48;
  const double q0 = std::log(1e-3), q1 = std::log(20.0), l0 = std::log(1e-6), l1 = std::log(1e6);
  std::vector<std::pair<double, std::pair<double, double>>> cells;
  for (int i = 0; i < nq; ++i)
    for (int j = 0; j < nl; ++j) {
      double lq = q0 + (q1 - q0) * i / (nq - 1), ll = l0 + (l1 - l0) * j / (nl - 1);
      cells.push_back({eval(lq, ll), {lq, ll}});
    }
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 0; k < std::min<std::size_t>(5, cells.size()); ++k) {
    auto [lq, ll] = cells[k].second;
    double f = cells[k].first;
    double hq = (q1 - q0) / (nq - 1), hl = (l1 - l0) / (nl - 1);
    while (hq > 1e-7 || hl > 1e-7) {
      bool moved = false;
      const double dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (const auto& d : dirs) {
        double nlq = std::clamp(lq + d[0] * hq, q0, q1), nll = std::clamp(ll + d[1] * hl, l0, l1);
        double v = eval(nlq, nll);
        if (v < f) {
          f = v;
          lq = nlq;
          ll = nll;
          moved = true;
          break;
        }
      }
      if (!moved) {
        hq *= 0.5;
        hl *= 0.5;
      }
    }
  }
  return best;
}

}  // namespace fpme
