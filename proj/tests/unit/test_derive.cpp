#include <doctest.h>

#include <cmath>
#include <random>

#include "fpme/catalog.hpp"
#include "fpme/derive.hpp"
#include "fpme/error.hpp"

using namespace fpme;

TEST_CASE("gap coefficients") {
  const auto g = gap_coefficients(2, 0.5, 1.0, 1.5, 0.5, 4);
  CHECK(g.coefficient(0) == 0.0);
  CHECK(std::abs(g.coefficient(2)) < 1e-15);
  // the printed g2 display
  const double N = 2, s = 0.5, bt = 0.5, q = 1.5, m = 1.0;
  CHECK((2 * bt * q * N - N * m * q - 2 * m * q * s + N * q - N * s - 2 * s * s) / N == doctest::Approx(0.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int k = 0; k < 20; ++k) CHECK(gap_coefficients(1 + k % 3, 0.3, u(rng), u(rng), u(rng)).coefficient(0) == 0.0);

  const double me = (1 - 0.5) / (1 + 0.5);
  const auto ge = gap_coefficients(1, 0.25, me, 0.75, 0.0, 4);
  CHECK(ge.max_abs(3) < 1e-12);
}

TEST_CASE("solve_m and solve_q") {
  CHECK(solve_m(2, 0.5, 1.5, 0.5) == doctest::Approx(1.0).epsilon(1e-13));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> us(0.05, 0.95);
  for (int k = 0; k < 20; ++k) {
    const int N = 1 + k % 3;
    const double s = us(rng), q = 0.5 * N + s;
    CHECK(solve_m(N, s, q, 1.0 / N) == doctest::Approx((N + 2 - 2 * s) / (N + 2 * s)).epsilon(1e-12));
    CHECK(solve_m(N, s, q, 0.0) == doctest::Approx((N - 2 * s) / (N + 2 * s)).epsilon(1e-12));
    CHECK(solve_q(N, s, 0.0) == doctest::Approx(q).epsilon(1e-12));
    CHECK(solve_q(N, s, 1.0 / N) == doctest::Approx(q).epsilon(1e-12));
    CHECK(solve_m(N, s, q, 0.37) == doctest::Approx(closed_form_m(N, s, q, 0.37)).epsilon(1e-12));
    CHECK(solve_q(N, s, 0.37) == doctest::Approx(closed_form_q(N, s, 0.37)).epsilon(1e-12));
  }
  CHECK(solve_q(2, 0.75, 1.0 / (2 + 1.5 - 2)) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("beta cases") {
  SUBCASE("N = 1, s = 1/2") {
    const auto c = beta_cases(1, 0.5);
    REQUIRE(c.size() == 4);
    CHECK(c[0].kind == BetaCaseKind::extinction);
    CHECK(c[0].beta_t == 0.0);
    CHECK(c[1].kind == BetaCaseKind::first_kind);
    CHECK(c[1].beta_t == doctest::Approx(1.0));
    CHECK(c[1].admissible);
    CHECK(c[2].kind == BetaCaseKind::rejected);
    CHECK(c[2].beta_t == doctest::Approx(0.5));
    CHECK(c[2].q == doctest::Approx(-1.0));
    CHECK_FALSE(c[2].admissible);
    CHECK(c[3].kind == BetaCaseKind::absent);
    CHECK(std::isnan(c[3].beta_t));
  }
  SUBCASE("N = 3, s = 1/2: all roots finite and distinct") {
    const auto c = beta_cases(3, 0.5);
    for (const auto& x : c) CHECK(std::isfinite(x.beta_t));
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) CHECK(c[i].beta_t != doctest::Approx(c[j].beta_t));
    for (const auto& x : c)
      if (x.admissible) CHECK(std::abs(x.series.coefficient(6)) < 1e-11);
  }
  SUBCASE("N = 2, s = 3/4") {
    const auto c = beta_cases(2, 0.75);
    for (const auto& x : c) CHECK(std::isfinite(x.beta_t));
    CHECK(c[3].kind == BetaCaseKind::infinite_mass);
    CHECK(c[3].admissible);
  }
}

TEST_CASE("rederived families match the catalog") {
  const auto ext = rederive_family(1, 0.25, BetaCaseKind::extinction);
  CHECK(ext.alpha == doctest::Approx(1.5));
  CHECK(ext.m == doctest::Approx(1.0 / 3));
  CHECK(ext.q == doctest::Approx(0.75));
  CHECK(ext.alpha * (ext.m - 1) == doctest::Approx(-1.0));

  const auto im = rederive_family(2, 0.75, BetaCaseKind::infinite_mass);
  CHECK(im.alpha == doctest::Approx(3.0));
  CHECK(im.beta == doctest::Approx(2.0));
  CHECK_THROWS_AS(rederive_family(2, 0.75, BetaCaseKind::rejected), Error);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> us(0.05, 0.95);
  for (int k = 0; k < 30; ++k) {
    const int N = 1 + k % 3;
    const double s = us(rng);
    for (const auto& c : beta_cases(N, s)) {
      if (!c.admissible) continue;
      const auto got = rederive_family(N, s, c.kind);
      const auto want = make_family(got.family, N, s);
      INFO("N = " << N << " s = " << s << " " << to_string(c.kind));
      CHECK(c.series.max_abs(3) <= 1e-11);
      for (auto [a, b] : {std::pair{got.m, want.m}, {got.q, want.q}, {got.alpha, want.alpha}, {got.beta, want.beta}})
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
    }
  }
}

TEST_CASE("g6 roots outside the case split") {
  for (const auto& c : extra_g6_roots(2, 0.5)) CHECK_FALSE(c.admissible);
  const auto zeros = g6_zero_scan(2, 0.5, -0.9, 1.9, 400);
  CHECK_FALSE(zeros.empty());
  for (double z : zeros) CHECK(std::abs(g6_along(2, 0.5, z)) < 1e-9);
}

TEST_CASE("derivation trace") {
  const auto j = derivation_trace(1, 0.5);
  CHECK(j.at("cases").size() == 4);
  CHECK(j.at("cases")[3].at("kind") == "absent");
  CHECK(j.at("cases")[3].at("beta_tilde").is_null());
  CHECK_THROWS_AS(derivation_trace(1, 1.2), Error);
}
