#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fpme/catalog.hpp"
#include "fpme/error.hpp"
#include "fpme/evolve.hpp"

using namespace fpme;

namespace {

SpectralGrid box(int n, double L, int dim = 1) {
  SpectralGrid g;
  g.dim = dim;
  g.n = n;
  g.L = L;
  return g;
}

// sup error of 2 + cos(3x) evolved to t_end against its exact decay
double cosine_error(Stepper st, double s, double dt, double t_end) {
  const auto g = box(64, std::numbers::pi);
  EvolutionConfig c;
  c.s = s;
  c.stepper = st;
  c.dt = dt;
  Evolver ev(g, c);
  Field f = sample(g, [](double r) { return 2.0 + std::cos(3.0 * r); });
  ev.advance_to(f, t_end);
  const double decay = std::exp(-std::pow(3.0, 2.0 * s) * t_end);
  double err = 0.0;
  for (int i = 0; i < g.n; ++i) err = std::max(err, std::abs(f.at(i) - (2.0 + decay * std::cos(3.0 * g.coordinate(i)))));
  return err;
}

}  // namespace

TEST_CASE("linear modes decay by the exact multiplier") {
  for (double s : {0.2, 0.5, 0.85}) CHECK(cosine_error(Stepper::integrating_factor, s, 0.05, 0.5) < 1e-13);
  CHECK(cosine_error(Stepper::dopri45, 0.5, 0.01, 0.5) < 1e-7);
}

TEST_CASE("rk4 converges at fourth order") {
  const double e1 = cosine_error(Stepper::rk4, 0.5, 0.1, 1.0);
  const double e2 = cosine_error(Stepper::rk4, 0.5, 0.05, 1.0);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("mass is unchanged by FPME1 steps") {
  const auto g = box(256, 20.0);
  EvolutionConfig c;
  c.s = 0.4;
  c.m = 0.7;
  c.dt = 1e-3;
  Evolver ev(g, c);
  Field f = sample(g, [](double r) { return std::exp(-r * r); });
  const double m0 = f.mass();
  for (int k = 0; k < 20; ++k) {
    ev.step(f, 1e-3);
    CHECK(std::abs(f.mass() - m0) <= 1e-10 * m0);
  }
}

TEST_CASE("a constant field is stationary under FPME3") {
  for (int dim : {1, 2}) {
    const auto g = box(64, 10.0, dim);
    EvolutionConfig c;
    c.equation = Equation::fpme3;
    c.s = 0.6;
    c.m = 1.5;
    Evolver ev(g, c);
    std::vector<double> u(g.size(), 0.8), du;
    ev.rhs(u, du);
    double worst = 0.0;
    for (double x : du) worst = std::max(worst, std::abs(x));
    CHECK(worst < 1e-14);
  }
}

TEST_CASE("decay exponents") {
  ExperimentOptions o;
  o.grid.n = 1024;
  o.grid.L = 0.0;
  o.config.t_end = 10.0;

  auto poisson = fix_constants(make_family(Family::fpme1_mass_conserving, 1, 0.5), {.radius = 1.0});
  auto r = run_decay_experiment(poisson, o);
  CHECK(r.reference == doctest::Approx(-1.0));
  CHECK(std::abs(r.relative_error()) < 0.02);
  CHECK(r.mass_drift <= 1e-8);

  auto nonlinear = fix_constants(make_family(Family::fpme1_mass_conserving, 1, 0.75), {.radius = 1.0});
  CHECK(nonlinear.m == doctest::Approx(0.6));
  r = run_decay_experiment(nonlinear, o);
  CHECK(r.reference == doctest::Approx(-1.0 / 1.1));
  CHECK(std::abs(r.relative_error()) < 0.05);
  CHECK(r.mass_drift <= 1e-8);
}

TEST_CASE("extinction run") {
  ExperimentOptions o;
  o.grid.n = 4096;
  o.grid.L = 0.0;
  const auto r = run_extinction_experiment(1, 0.25, 1.0, o);
  CHECK(r.reference == doctest::Approx(1.0));
  CHECK(r.measured == doctest::Approx(1.0).epsilon(0.1));
  CHECK(r.shape_deviation < 0.02);

  const auto doubled = run_extinction_experiment(1, 0.25, 1.0, o, 1.0, 2.0);
  CHECK(doubled.reference == doctest::Approx(std::pow(2.0, 1.0 - 1.0 / 3.0)));
  CHECK(doubled.measured / r.measured == doctest::Approx(doubled.reference).epsilon(0.05));
}

TEST_CASE("profile convergence") {
  ExperimentOptions o;
  o.grid.n = 8192;
  o.grid.L = 0.0;
  o.config.t_end = 10.0;
  o.samples = 21;
  auto poisson = fix_constants(make_family(Family::fpme1_mass_conserving, 1, 0.5), {.radius = 1.0});

  const auto exact = run_profile_convergence(poisson, 0.0, o);
  for (const auto& row : exact.series) CHECK(row.profile_error <= 1e-3);

  const auto pert = run_profile_convergence(poisson, 0.1, o);
  double e2 = NAN;
  for (const auto& row : pert.series)
    if (std::abs(row.t - 2.0) < 1e-9 || (std::isnan(e2) && row.t > 2.0)) e2 = row.profile_error;
  REQUIRE(std::isfinite(e2));
  CHECK(pert.series.back().profile_error < e2);
  CHECK(pert.error_tail_nonincreasing);
  CHECK(pert.mass_drift <= 1e-8);
}

TEST_CASE("snapshots round trip") {
  const auto g = box(64, 3.0, 2);
  Field f = sample(g, [](double r) { return std::exp(-r) / 3.0; }, 0.125);
  std::stringstream ss;
  write_snapshot(ss, f);
  CHECK(ss.str().size() == 8 + 4 + 4 * 2 + 8 + 8 + 8 * 64 * 64);
  CHECK(ss.str().substr(0, 8) == "FPMESNP1");
  const Field back = read_snapshot(ss);
  CHECK(back.grid.dim == 2);
  CHECK(back.grid.n == 64);
  CHECK(back.grid.L == 3.0);
  CHECK(back.t == 0.125);
  CHECK(back.u == f.u);

  std::stringstream bad("FPMESNP0garbage");
  CHECK_THROWS_AS(read_snapshot(bad), Error);
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(validate(box(48, 10.0)), Error);
  CHECK_THROWS_AS(validate(box(100, 10.0)), Error);
  CHECK_THROWS_AS(validate(box(64, 10.0, 3)), Error);
  EvolutionConfig c;
  c.m = 2.0;
  c.stepper = Stepper::integrating_factor;
  CHECK_THROWS_AS(validate(c), Error);
  c.stepper = Stepper::automatic;
  c.dt = 0.0;
  CHECK_THROWS_AS(validate(c), Error);
  CHECK(stepper_from_string(to_string(Stepper::dopri45)) == Stepper::dopri45);
  CHECK_THROWS_AS(stepper_from_string("euler"), Error);
}

TEST_CASE("runaway steps are reported as instability") {
  const auto g = box(64, 10.0);
  EvolutionConfig c;
  c.stepper = Stepper::rk4;
  c.s = 0.9;
  c.m = 3.0;
  c.max_halvings = 3;
  Evolver ev(g, c);
  Field f = sample(g, [](double r) { return 50.0 * std::exp(-r * r); });
  try {
    ev.step(f, 10.0);
    FAIL("expected an instability");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::instability);
  }
}
