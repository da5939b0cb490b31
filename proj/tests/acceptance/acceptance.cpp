// Acceptance checks, one PASS/FAIL line per criterion.
//   acceptance [--only k]
// Exit status is 0 when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpme/catalog.hpp"
#include "fpme/derive.hpp"
#include "fpme/error.hpp"
#include "fpme/evolve.hpp"
#include "fpme/fraclap.hpp"
#include "fpme/residual.hpp"
#include "fpme/specfun.hpp"

using namespace fpme;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "  failed: " << what << '\n';
    }
  }
};

double rel(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

std::string sci(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", x);
  return b;
}

// (N, s) drawn until the family exists
SelfSimilarSolution draw_family(Family f, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> uN(1, 3);
  std::uniform_real_distribution<double> us(0.05, 0.95);
  for (;;) {
    try {
      auto sol = make_family(f, uN(rng), us(rng));
      if (f == Family::fpme3_mass_conserving && std::abs(sol.m - 1.0) < 1e-3) continue;
      return fix_constants(sol, ConstantSpec{std::nullopt, 1.0, std::nullopt, 1.0});
    } catch (const Error&) {
    }
  }
}

template <class A, class B>
double worst_on_grid(const std::vector<double>& grid, const A& a, const B& b) {
  double w = 0.0;
  for (double r : grid) w = std::max(w, rel(a(r), b(r)));
  return w;
}

void c1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  auto check = [&](const char* name, int N, double s, double q, double R, double val) {
    worst = std::max(worst, val);
    o.detail << "  " << name << " N=" << N << " s=" << s << " q=" << q << " R=" << R << ": max rel " << sci(val) << '\n';
    o.require(val <= 1e-5, name);
  };
  for (auto [N, s, q, R] : {std::tuple{1, 0.25, 0.75, 1.3}, {2, 0.5, 1.5, 0.8}, {3, 0.75, 2.25, 1.0}, {2, 0.3, 0.7, 2.0}}) {
    const RadialProfile p{ProfileShape::rising, q, R, 0.7, N};
    const NumericFracLap num({s, N}, p);
    const HyperField cf = frac_lap_rising({s, N}, p);
    check("frac_lap_rising", N, s, q, R, worst_on_grid(log_grid(R), num, cf));
  }
  for (auto [N, s, R] : {std::tuple{1, 0.5, 1.0}, {2, 0.3, 1.5}, {3, 0.7, 0.6}}) {
    const double q = 0.5 * N + 1.0 - s;
    const RadialProfile p{ProfileShape::rising, q, R, 1.2, N};
    const NumericFracLap num({s, N}, p);
    const SpecialResult sp = frac_lap_rising_special({s, N}, p);
    check("frac_lap_rising_special (i)", N, s, q, R, worst_on_grid(log_grid(R), num, sp));
  }
  for (auto [N, s, R] : {std::tuple{2, 0.5, 1.0}, {3, 0.25, 1.4}, {3, 0.8, 0.9}}) {
    const double q = 0.5 * N - s;
    const RadialProfile p{ProfileShape::rising, q, R, 1.0, N};
    const NumericFracLap num({s, N}, p);
    const SpecialResult sp = frac_lap_rising_special({s, N}, p);
    check("frac_lap_rising_special (ii)", N, s, q, R, worst_on_grid(log_grid(R), num, sp));
  }
  for (auto [N, s, q, R] : {std::tuple{3, 0.5, 1.0, 1.0}, {1, 0.25, 1.5, 1.0}, {2, 0.6, 0.8, 1.5}, {1, 0.4, 0.5, 2.0}}) {
    const RadialProfile p{ProfileShape::compact, q, R, 0.9, N};
    const NumericFracLap num({-s, N}, p);
    check("inv_frac_lap_compact", N, s, q, R,
          worst_on_grid(log_grid(R), num, [&](double r) { return inv_frac_lap_compact({s, N}, p, r); }));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.detail << "  runtime " << secs << " s\n";
  o.require(secs <= 120.0, "runtime above 2 min");
  o.detail << "  worst " << sci(worst) << " (tolerance 1e-5)\n";
}

void c2(Outcome& o) {
  for (auto [mu, nu, rho, a, b] : {std::tuple{0.5, 0.5, 0.0, 1.0, 1.0}, {0.25, 1.5, 0.5, 2.0, 1.0},
                                   {0.0, 0.0, 0.0, 1.0, 0.5}, {1.2, 2.0, -0.5, 1.5, 3.0}, {0.7, 1.0, 0.3, 0.5, 2.0}}) {
    const auto ws = weber_schafheitlin_check(mu, nu, rho, a, b);
    const double e = rel(ws.lhs, ws.rhs);
    o.detail << "  mu=" << mu << " nu=" << nu << " rho=" << rho << " a=" << a << " b=" << b << ": lhs " << ws.lhs
             << " rhs " << ws.rhs << " rel " << sci(e) << '\n';
    o.require(e <= 1e-7, "Weber-Schafheitlin tuple");
  }
}

void c3(Outcome& o) {
  std::mt19937_64 rng(20240613);
  for (Family f : {Family::fpme1_mass_conserving, Family::fpme1_extinction, Family::fpme1_infinite_mass,
                   Family::fpme3_mass_conserving}) {
    double worst = 0.0, weakest = INFINITY;
    for (int k = 0; k < 10; ++k) {
      const auto sol = draw_family(f, rng);
      const auto grid = log_grid(sol.R);
      const double n0 = residual_profile(sol, grid).norm;
      worst = std::max(worst, n0);
      o.require(n0 <= 1e-8, to_string(f) + " N=" + std::to_string(sol.N) + " s=" + std::to_string(sol.s) +
                                " exact residual " + sci(n0));
      for (auto [name, field] : {std::pair{"m", &SelfSimilarSolution::m}, {"q", &SelfSimilarSolution::q},
                                 {"alpha", &SelfSimilarSolution::alpha}, {"beta", &SelfSimilarSolution::beta}}) {
        auto bad = sol;
        // 1% of the value; a vanishing exponent is moved by 0.01
        bad.*field = bad.*field != 0.0 ? 1.01 * bad.*field : 0.01;
        double n1 = 0.0;
        try {
          n1 = residual_profile(bad, grid).norm;
        } catch (const Error& e) {
          n1 = INFINITY;
        }
        weakest = std::min(weakest, n1);
        o.require(n1 > 1e-3, to_string(f) + " N=" + std::to_string(sol.N) + " s=" + std::to_string(sol.s) +
                                 " perturbed " + name + ": residual " + sci(n1));
      }
    }
    o.detail << "  " << to_string(f) << ": worst exact " << sci(worst) << ", smallest perturbed " << sci(weakest) << '\n';
  }
}

void c4(Outcome& o) {
  std::mt19937_64 rng(20240614);
  std::uniform_int_distribution<int> uN(1, 3);
  std::uniform_real_distribution<double> us(0.05, 0.95), um(2.2, 5.0);
  for (int k = 0; k < 5; ++k) {
    const int N = uN(rng);
    const double s = us(rng), m = um(rng);
    const auto r = nonexistence_search(N, s, m);
    o.detail << "  N=" << N << " s=" << s << " m=" << m << ": min residual " << sci(r.min_norm) << " at q=" << r.q
             << " lambda=" << r.lambda << '\n';
    o.require(r.min_norm >= 0.05, "minimal compact-profile residual below 0.05");
  }
}

void c5(Outcome& o) {
  std::mt19937_64 rng(20240615);
  std::uniform_real_distribution<double> uq(0.1, 4.0), us(0.05, 0.95);
  std::uniform_int_distribution<int> uN(1, 3);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int N = uN(rng);
    const double q = uq(rng);
    double s = us(rng);
    if (2 * s >= N) s = 0.45 * N;  // the inverse operator needs 2s < N
    const RadialProfile p{ProfileShape::compact, q, 1.3, 1.0, N};
    const double in = inv_frac_lap_compact({s, N}, p, p.R * (1 - 1e-15));
    const double out = inv_frac_lap_compact({s, N}, p, p.R * (1 + 1e-15));
    worst = std::max(worst, rel(in, out));
    o.require(rel(in, out) <= 1e-8, "branch mismatch N=" + std::to_string(N) + " q=" + std::to_string(q));
  }
  o.detail << "  worst jump at |y| = R: " << sci(worst) << '\n';
}

void c6(Outcome& o) {
  std::mt19937_64 rng(20240616);
  std::uniform_int_distribution<int> uN(1, 3);
  std::uniform_real_distribution<double> us(0.05, 0.95);
  double gmax = 0.0, pmax = 0.0;
  int surviving = 0;
  for (int k = 0; k < 30; ++k) {
    const int N = uN(rng);
    const double s = us(rng);
    bool rejected_seen = false;
    for (const auto& c : beta_cases(N, s)) {
      if (c.kind == BetaCaseKind::rejected) {
        rejected_seen = true;
        o.require(rel(c.beta_t, s / N) < 1e-12 && std::abs(c.q + 1.0) < 1e-12 && !c.admissible,
                  "beta~ = s/N case not rejected with q = -1");
      }
      if (!c.admissible) continue;
      ++surviving;
      const double g = std::max({std::abs(c.series.coefficient(2)), std::abs(c.series.coefficient(4)),
                                 std::abs(c.series.coefficient(6))});
      gmax = std::max(gmax, g);
      o.require(g <= 1e-11, "surviving case with |g| " + sci(g));
      const auto got = rederive_family(N, s, c.kind);
      const auto want = make_family(got.family, N, s);
      for (auto [a, b] : {std::pair{got.m, want.m}, {got.q, want.q}, {got.alpha, want.alpha}, {got.beta, want.beta}}) {
        const double d = std::abs(a - b) / std::max(1.0, std::abs(b));
        pmax = std::max(pmax, d);
        o.require(d <= 1e-12, "assembled exponents differ from the catalog");
      }
    }
    o.require(rejected_seen, "no beta~ = s/N case for N=" + std::to_string(N));
  }
  o.detail << "  " << surviving << " surviving cases, max |g2,g4,g6| " << sci(gmax) << ", max exponent mismatch "
           << sci(pmax) << '\n';
}

struct DecayRun {
  const char* name;
  Family family;
  double s;
  double tol;
};

std::vector<ExperimentResult> decay_runs(Outcome& o, bool report) {
  std::vector<ExperimentResult> out;
  for (const DecayRun& d : {DecayRun{"fpme1 N=1 s=0.5 (linear)", Family::fpme1_mass_conserving, 0.5, 0.02},
                            DecayRun{"fpme1 N=1 s=0.75 m=0.6", Family::fpme1_mass_conserving, 0.75, 0.05},
                            DecayRun{"fpme3 N=1 s=0.75 m=1.4", Family::fpme3_mass_conserving, 0.75, 0.05}}) {
    ExperimentOptions opt;
    opt.grid.n = 1024;
    opt.grid.L = 0.0;
    opt.config.t_end = 10.0;
    const auto sol = fix_constants(make_family(d.family, 1, d.s), ConstantSpec{std::nullopt, 1.0, std::nullopt, 1.0});
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_decay_experiment(sol, opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (report) {
      o.detail << "  " << d.name << ": measured " << r.measured << ", reference " << r.reference << ", rel "
               << sci(r.relative_error()) << " (tolerance " << d.tol << "), " << secs << " s\n";
      o.require(r.relative_error() <= d.tol, std::string(d.name) + " exponent");
      o.require(secs <= 300.0, std::string(d.name) + " runtime above 5 min");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void c7(Outcome& o) { decay_runs(o, true); }

void c8(Outcome& o) {
  ExperimentOptions opt;
  opt.grid.n = 16384;
  opt.grid.L = 0.0;
  const auto r = run_extinction_experiment(1, 0.25, 1.0, opt);
  o.detail << "  measured T " << r.measured << ", prescribed " << r.reference << ", rel " << sci(r.relative_error())
           << " (tolerance 0.1); shape drift " << sci(r.shape_deviation) << " (tolerance 0.02)\n";
  o.require(r.relative_error() <= 0.1, "extinction time");
  o.require(r.shape_deviation <= 0.02, "profile shape");
}

void c9(Outcome& o) {
  Outcome silent;
  const auto runs = decay_runs(silent, false);
  const char* names[] = {"fpme1 N=1 s=0.5", "fpme1 N=1 s=0.75", "fpme3 N=1 s=0.75"};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    o.detail << "  decay " << names[i] << ": drift " << sci(runs[i].mass_drift) << '\n';
    o.require(runs[i].mass_drift <= 1e-8, std::string(names[i]) + " mass drift");
  }
  ExperimentOptions opt;
  opt.grid.n = 8192;
  opt.grid.L = 0.0;
  opt.config.t_end = 10.0;
  const auto sol = fix_constants(make_family(Family::fpme1_mass_conserving, 1, 0.5),
                                 ConstantSpec{std::nullopt, 1.0, std::nullopt, 1.0});
  const auto r = run_profile_convergence(sol, 0.1, opt);
  o.detail << "  perturbed Poisson run: drift " << sci(r.mass_drift) << '\n';
  o.require(r.mass_drift <= 1e-8, "perturbed run mass drift");
}

void c10(Outcome& o) {
  const double pi = std::acos(-1.0);
  auto near = [&](double got, double want, double tol, const std::string& what) {
    const double e = rel(got, want);
    o.require(e <= tol, what + ": got " + sci(got) + ", want " + sci(want));
  };
  near(fpme::gamma(5.0), 24.0, 1e-14, "gamma(5)");
  near(fpme::gamma(0.5), std::sqrt(pi), 1e-14, "gamma(1/2)");
  near(fpme::gamma(1.5), 0.5 * std::sqrt(pi), 1e-14, "gamma(3/2)");
  near(hyper2f1({0.3, 1.7, 2.2, ArgDomain::unit_disk}, 0.0), 1.0, 0.0, "2F1 at 0");
  near(hyper2f1({-2.0, 1.5, 1.5, ArgDomain::unit_disk}, 0.25), 0.5625, 1e-14, "2F1(-2,1.5;1.5;0.25)");
  near(hyper2f1({1.0, 1.0, 2.0, ArgDomain::unit_disk}, 0.5), 2.0 * std::log(2.0), 1e-13, "2F1(1,1;2;0.5)");
  near(hyper2f1({1.0, 1.5, 1.5, ArgDomain::negative_axis}, -3.0), 0.25, 1e-13, "2F1(1,1.5;1.5;-3)");
  near(hyper2f1_derivative({0.7, 1.3, 2.9, ArgDomain::unit_disk}, 0.0), 0.7 * 1.3 / 2.9, 1e-14, "2F1' at 0");
  near(hyper2f1_derivative({1.0, 1.0, 2.0, ArgDomain::unit_disk}, 0.5), 1.2274112777602189, 1e-10,
       "2F1'(1,1;2;0.5)");
  for (double x : {-7.0, -0.4, 0.6})
    near(hyper2f1_derivative({-1.0, 2.5, 3.5, x < 0 ? ArgDomain::negative_axis : ArgDomain::unit_disk}, x),
         -2.5 / 3.5, 1e-13, "2F1'(-1,b;c)");
  near(bessel_j(0.0, 1e-10), 1.0, 1e-15, "J0 near 0");
  near(bessel_k(0.5, 1.0), std::sqrt(pi / 2) * std::exp(-1.0), 1e-12, "K_1/2(1)");
  near(bessel_k(-0.7, 2.0), bessel_k(0.7, 2.0), 1e-15, "K_-nu = K_nu");

  std::mt19937_64 rng(20240617);
  std::uniform_real_distribution<double> ua(-2.5, 3.0), uc(0.5, 4.0), ux(-0.9, 0.9), uneg(-40.0, -1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double x = k % 2 ? ux(rng) : uneg(rng);
    const Hyper2F1Spec sp{ua(rng), ua(rng), uc(rng),
                          std::abs(x) < 1 ? ArgDomain::unit_disk : ArgDomain::negative_axis};
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    const Hyper2F1Spec spn{sp.a, sp.b, sp.c, std::abs(x - h) < 1 ? ArgDomain::unit_disk : ArgDomain::negative_axis};
    const Hyper2F1Spec spp{sp.a, sp.b, sp.c, std::abs(x + h) < 1 ? ArgDomain::unit_disk : ArgDomain::negative_axis};
    const double fd = (hyper2f1(spp, x + h) - hyper2f1(spn, x - h)) / (2 * h);
    const double an = hyper2f1_derivative(sp, x);
    const double e = std::abs(fd - an) / std::max(1.0, std::abs(an));
    worst = std::max(worst, e);
  }
  o.detail << "  derivative vs central differences, 100 points: worst " << sci(worst) << " (tolerance 1e-7)\n";
  o.require(worst <= 1e-7, "derivative vs finite differences");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  bool verbose = false;
  app.add_option("--only", only, "run a single criterion")->check(CLI::Range(1, 10));
  app.add_flag("-v,--verbose", verbose, "print measurements for passing criteria too");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, void (*)(Outcome&)>> criteria = {
      {"closed-form operators vs numeric oracle", c1},
      {"Weber-Schafheitlin spot checks", c2},
      {"exact-family residuals and perturbations", c3},
      {"nonexistence of compact FPME3 profiles for m > 2", c4},
      {"branch continuity at |y| = R", c5},
      {"derivation closure", c6},
      {"solver decay exponents", c7},
      {"finite-time extinction", c8},
      {"mass conservation in solver runs", c9},
      {"special-function suite", c10},
  };
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<int>(k) + 1 != only) continue;
    Outcome o;
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "  exception: " << e.what() << '\n';
    }
    std::printf("criterion %zu: %s  %s\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first);
    if (!o.pass || verbose || only) std::fputs(o.detail.str().c_str(), stdout);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
