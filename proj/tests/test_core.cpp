#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gcir/core.hpp"

using namespace gcir;

TEST_CASE("G examples") {
  const GFunction gf(1.0, 4.0);
  CHECK(g_eval(gf, 0.0) == 0.0);
  CHECK(g_eval(gf, 2.0) == 4.0);
  CHECK(g_eval(gf, -2.0) == -1.0);
  CHECK(g_argmax(gf, 3.0) == 4.0);
  CHECK(g_argmax(gf, -3.0) == 1.0);
  CHECK(g_argmax(gf, 0.0) == 4.0);
}

TEST_CASE("G band validation") {
  CHECK_THROWS_AS(GFunction(2.0, 2.0), ValidationError);
  CHECK_THROWS_AS(GFunction(3.0, 2.0), ValidationError);
  CHECK_THROWS_AS(GFunction(-1.0, 2.0), ValidationError);
  CHECK_THROWS_AS(GFunction(0.0, std::numeric_limits<double>::quiet_NaN()), ValidationError);
  CHECK_NOTHROW(GFunction(0.0, 1.0));
  const auto single = GFunction::single_prior(1.5);
  CHECK(single.degenerate());
  CHECK(single(2.0) == 1.5);
  CHECK(single(-2.0) == -1.5);
  CHECK_THROWS_AS(GFunction::single_prior(-1.0), ValidationError);
}

TEST_CASE("G properties on random inputs") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ua(-100.0, 100.0), ul(0.0, 10.0), ub(0.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const double lo = ub(rng);
    const GFunction gf(lo, lo + 1e-3 + ub(rng));
    const double a = ua(rng), b = ua(rng), lam = ul(rng);
    const double eps = 4 * std::numeric_limits<double>::epsilon();
    CHECK(gf(a + b) <= gf(a) + gf(b) + eps * (std::abs(gf(a)) + std::abs(gf(b)) + std::abs(gf(a + b))));
    CHECK(gf(lam * a) == doctest::Approx(lam * gf(a)).epsilon(eps));
    const double lo_ab = std::min(a, b), hi_ab = std::max(a, b);
    CHECK(gf(lo_ab) <= gf(hi_ab));
    if (a != 0.0) CHECK(2.0 * gf(a) == doctest::Approx(gf.argmax(a) * a).epsilon(eps));
  }
}

TEST_CASE("CirParams validation by regime") {
  CHECK_NOTHROW(CirParams::full(1, 1, 1, 1, 1).validate());
  CHECK_NOTHROW(CirParams::drift_only(1, 0.5, 1).validate());
  CHECK_NOTHROW(CirParams::qv_only(1, 1, 0).validate());
  CirParams p = CirParams::drift_only(1, 0.5, 1);
  p.delta2 = 0.1;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK_THROWS_AS(CirParams::full(1, 0, 1, 1, 1).validate(), ValidationError);
  CHECK_THROWS_AS(CirParams::full(1, 1, 1, 1, -1).validate(), ValidationError);
  CHECK(regime_from_string(to_string(Regime::QvOnly)) == Regime::QvOnly);
  CHECK_THROWS_AS(regime_from_string("mixed"), ValidationError);
}

TEST_CASE("general form conversion") {
  const auto g = to_general_form(CirParams::full(1, 1, 1, 1, 1));
  CHECK(g.beta1_tilde == -0.5);
  CHECK(g.beta2_tilde == -0.5);
  const auto g2 = to_general_form(CirParams::full(1, 1, 0.5, 2, 1));
  CHECK(g2.beta1_tilde == -0.25);
  CHECK(g2.beta2_tilde == -1.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const auto p = CirParams::full(u(rng), u(rng), u(rng), u(rng), u(rng));
    CHECK(from_general_form(to_general_form(p), p.sigma, p.regime) == p);
  }
  GeneralFormCoeffs bad{0.5, -1.0, 1.0, 1.0};
  CHECK_THROWS_AS(from_general_form(bad, 1.0), ValidationError);
}

TEST_CASE("payoff examples") {
  CHECK(payoff_eval(Payoff::identity(), 1.5) == 1.5);
  CHECK(payoff_eval(Payoff::smoothed_indicator(1.0, 0.5), 1.25) == 0.5);
  CHECK(payoff_eval(Payoff::smoothed_indicator(1.0, 0.5), 0.3) == 1.0);
  CHECK(payoff_eval(Payoff::smoothed_indicator(1.0, 0.5), 2.0) == 0.0);
  CHECK(payoff_eval(Payoff::square(), 3.0) == 9.0);
  CHECK(payoff_eval(Payoff::neg_square(), 3.0) == -9.0);
  CHECK(payoff_eval(Payoff::negate(), 2.0) == -2.0);
  CHECK(payoff_eval(Payoff::clipped_linear(1.0, 2.0), 3.0) == 2.0);
  CHECK(payoff_eval(Payoff::constant(0.7), 5.0) == 0.7);
  CHECK_THROWS_AS(payoff_eval(Payoff::identity(), -0.1), ValidationError);
  CHECK(Payoff::identity().eval_extended(-0.1) == -0.1);
  CHECK(Payoff::square().negated()(2.0) == -4.0);
  CHECK(Payoff::square().negated().negated()(2.0) == 4.0);

  const auto c = Payoff::custom({0.0, 1.0, 2.0}, {0.0, 2.0, 1.0});
  CHECK(c(0.5) == 1.0);
  CHECK(c(1.5) == 1.5);
  CHECK(c(10.0) == 1.0);
  CHECK_THROWS_AS(Payoff::custom({0.0, 0.0}, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(Payoff::smoothed_indicator(1.0, 0.0), ValidationError);
}

TEST_CASE("payoff Lipschitz and sup bounds hold on samples") {
  const Payoff payoffs[] = {Payoff::identity(), Payoff::square(), Payoff::smoothed_indicator(1.0, 0.05),
                            Payoff::clipped_linear(0.5, 2.0), Payoff::custom({0, 1, 3}, {1, -1, 2}),
                            Payoff::neg_square()};
  const double cap = 6.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, cap);
  for (const auto& phi : payoffs) {
    const double L = phi.lipschitz_bound(cap), S = phi.sup_abs(cap);
    for (int i = 0; i < 2000; ++i) {
      const double x = u(rng), y = u(rng);
      CHECK(std::abs(phi(x) - phi(y)) <= L * std::abs(x - y) * (1 + 1e-12) + 1e-15);
      CHECK(std::abs(phi(x)) <= S * (1 + 1e-12));
    }
  }
  CHECK(Payoff::smoothed_indicator(1.0, 0.05).lipschitz_bound(cap) == doctest::Approx(20.0));
}
