#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gcir/closed_form.hpp"
#include "gcir/parallel.hpp"
#include "gcir/philox.hpp"
#include "gcir/simulator.hpp"

using namespace gcir;
using namespace gcir::sim;

namespace {

const GFunction kBand(1.0, 2.0);

EulerConfig cfg(std::uint64_t steps, std::uint64_t paths, std::uint64_t seed = 99) {
  EulerConfig c;
  c.n_steps = steps;
  c.n_paths = paths;
  c.seed = seed;
  return c;
}

bool within(const McEstimate& e, double ref, double bias) { return std::abs(e.value - ref) <= 3 * e.std_error + bias; }

}  // namespace

TEST_CASE("philox known answers") {
  using rng::philox4x32_10;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == rng::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
        rng::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        rng::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal stream moments") {
  const rng::NormalStream ns(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = ns.normal(i, 3);
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1) < 0.015);
  CHECK(ns.normal(7, 4) != ns.normal(7, 5));
  CHECK(ns.normal(7, 4) == rng::NormalStream(5).normal(7, 4));
  CHECK(ns.normal(7, 4) != rng::NormalStream(6).normal(7, 4));
}

TEST_CASE("summarize") {
  const std::vector<double> same(10, 0.3);
  const auto a = summarize(same);
  CHECK(a.value == 0.3);
  CHECK(a.std_error == 0.0);
  const std::vector<double> v{1, 2, 3, 4};
  const auto b = summarize(v);
  CHECK(b.value == 2.5);
  CHECK(b.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK_THROWS_AS(summarize(std::vector<double>{}), ValidationError);
}

TEST_CASE("deterministic paths without noise") {
  const McProblem fixed{CirParams::full(1, 1, 1, 1, 0), kBand, 0, 1, 1.0};
  const auto r = euler_path(fixed, VolatilityControl::constant(1.0), cfg(64, 1), 0);
  CHECK(r.terminal == 1.0);
  CHECK(r.running_min == 1.0);

  const McProblem empty{CirParams::full(1, 1, 1, 1, 1), kBand, 0.5, 0.5, 0.8};
  CHECK(euler_path(empty, VolatilityControl::constant(1.2), cfg(32, 1), 0).terminal == 0.8);

  const McProblem ode{CirParams::drift_only(1.0, 0.5, 0.0), kBand, 0, 1, 1.0};
  const double x = euler_path(ode, VolatilityControl::constant(1.3), cfg(1 << 14, 1), 0).terminal;
  CHECK(std::abs(x - (2 - std::exp(-0.5))) < 1e-4);
}

TEST_CASE("constant payoffs") {
  const McProblem prob{CirParams::full(1, 1, 1, 1, 1), kBand, 0, 1, 1.0};
  const auto e = mc_expectation(Payoff::constant(0.4), prob, VolatilityControl::constant(1.0), cfg(64, 500));
  CHECK(e.value == 0.4);
  CHECK(e.std_error == 0.0);
  const auto lo = lower_expectation(Payoff::constant(0.4), prob, cfg(64, 500), ConstantSearch{3});
  CHECK(lo.estimate.value == 0.4);
}

TEST_CASE("projection zeroes diffusion below zero and controls stay in band") {
  const McProblem prob{CirParams::qv_only(0.2, 1.0, 1.5), kBand, 0, 1, 0.0};
  std::size_t negatives = 0;
  auto check_record = [&](const StepRecord& r) {
    CHECK(r.theta >= kBand.sigma_lo());
    CHECK(r.theta <= kBand.sigma_hi());
    if (r.x < 0.0) {
      ++negatives;
      CHECK(r.diffusion_increment == 0.0);
    }
  };
  const auto piecewise = VolatilityControl::piecewise({0.3, 0.7}, {1.0, 1.4, std::sqrt(2.0)});
  for (std::uint64_t i = 0; i < 200; ++i) euler_path(prob, piecewise, cfg(16, 200), i, check_record);
  CHECK(negatives > 0);
}

TEST_CASE("control validation") {
  CHECK_THROWS_AS(VolatilityControl::constant(2.0).validate(kBand), ValidationError);
  CHECK_THROWS_AS(VolatilityControl::constant(0.5).validate(kBand), ValidationError);
  CHECK_NOTHROW(VolatilityControl::constant(1.0).validate(kBand));
  CHECK_THROWS_AS(VolatilityControl::piecewise({0.5}, {1.0}), ValidationError);
  CHECK_THROWS_AS(VolatilityControl::piecewise({0.5, 0.4}, {1.0, 1.0, 1.0}), ValidationError);
  const McProblem prob{CirParams::full(1, 1, 1, 1, 1), kBand, 0, 1, 1.0};
  CHECK_THROWS_AS(simulate(prob, VolatilityControl::constant(3.0), cfg(8, 8)), ValidationError);
}

TEST_CASE("control field lookup clamps") {
  const pde::SpatialGrid g(4.0, 41);
  const auto f = ControlField::uniform(g, 1.0, 1.5);
  CHECK(f.variance_at(0.3, 100.0) == 1.5);
  CHECK(f.variance_at(0.3, -1.0) == 1.5);
}

TEST_CASE("uniform field reproduces the constant control path for path") {
  const McProblem prob{CirParams::full(1, 1, 1, 1, 1), kBand, 0, 1, 1.0};
  const auto field = std::make_shared<const ControlField>(ControlField::uniform(pde::SpatialGrid(8.0, 81), 1.0, 2.0));
  const auto a = simulate(prob, VolatilityControl::bang_bang(field), cfg(64, 300));
  const auto b = simulate(prob, VolatilityControl::constant(std::sqrt(2.0)), cfg(64, 300));
  CHECK(a.terminal_values == b.terminal_values);
  CHECK(a.min_values == b.min_values);
}

TEST_CASE("results do not depend on the worker count") {
  const McProblem prob{CirParams::full(1, 1, 1, 1, 1), kBand, 0, 1, 1.0};
  parallel::set_workers(1);
  const auto a = upper_expectation_constant(Payoff::square(), prob, cfg(64, 3000), 3);
  parallel::set_workers(8);
  const auto b = upper_expectation_constant(Payoff::square(), prob, cfg(64, 3000), 3);
  parallel::set_workers(0);
  CHECK(a.estimate.value == b.estimate.value);
  CHECK(a.estimate.std_error == b.estimate.std_error);
  CHECK(a.theta_star == b.theta_star);
}

TEST_CASE("payoff monotonicity holds exactly on common seeds") {
  const McProblem prob{CirParams::full(1, 1, 1, 1, 1), kBand, 0, 1, 1.0};
  const auto c = VolatilityControl::constant(1.2);
  const auto lo = mc_expectation(Payoff::clipped_linear(0.0, 1.0), prob, c, cfg(64, 2000));
  const auto hi = mc_expectation(Payoff::clipped_linear(0.5, 1.5), prob, c, cfg(64, 2000));
  CHECK(lo.value <= hi.value);
  const auto ens = simulate(prob, c, cfg(64, 2000));
  for (double x : ens.terminal_values)
    CHECK(Payoff::clipped_linear(0.0, 1.0).eval_extended(x) <= Payoff::clipped_linear(0.5, 1.5).eval_extended(x));
}

TEST_CASE("drift-only Monte Carlo matches the closed forms") {
  const McProblem mean_prob{CirParams::drift_only(1.0, 0.5, 1.0), kBand, 0, 1, 1.0};
  for (double theta : {1.0, std::sqrt(2.0)}) {
    const auto e = mc_expectation(Payoff::identity(), mean_prob, VolatilityControl::constant(theta), cfg(256, 20000));
    CHECK(within(e, 2 - std::exp(-0.5), 5e-3));
  }
  const McProblem sq{CirParams::drift_only(1.0, 1.0, 1.0), kBand, 0, 1, 1.0};
  const auto e = mc_expectation(Payoff::square(), sq, VolatilityControl::constant(std::sqrt(2.0)), cfg(256, 20000));
  CHECK(within(e, 2 - std::exp(-2.0), 1e-2));
  const auto up = upper_expectation_constant(Payoff::square(), sq, cfg(256, 5000), 3);
  CHECK(*up.theta_star == std::sqrt(2.0));

  const auto u = upper_expectation_constant(Payoff::identity(), mean_prob, cfg(256, 20000), 3);
  const auto l = lower_expectation(Payoff::identity(), mean_prob, cfg(256, 20000), ConstantSearch{3});
  CHECK(std::abs(u.estimate.value - l.estimate.value) <= 3 * (u.estimate.std_error + l.estimate.std_error));
}

TEST_CASE("qv-only upper and lower at x0 = 0") {
  const McProblem prob{CirParams::qv_only(1.0, 1.0, 1.0), kBand, 0, 1, 0.0};
  const auto up = upper_expectation_constant(Payoff::identity(), prob, cfg(256, 20000), 3);
  CHECK(*up.theta_star == std::sqrt(2.0));
  CHECK(within(up.estimate, 1 - std::exp(-2.0), 5e-3));
  const auto lo = lower_expectation(Payoff::identity(), prob, cfg(256, 20000), ConstantSearch{3});
  CHECK(within(lo.estimate, 1 - std::exp(-1.0), 5e-3));
}

TEST_CASE("bang-bang control is at least as good as the best constant") {
  const McProblem prob{CirParams::qv_only(1.0, 1.0, 1.0), kBand, 0, 1, 1.0};
  const pde::PdeProblem pp{prob.params, kBand, Payoff::identity(), 1.0};
  const auto sol = pde::solve(pp, pde::SpatialGrid(6.0, 121));
  const auto field = ControlField::from_solution(sol);
  const auto bb = upper_expectation_bangbang(Payoff::identity(), prob, cfg(128, 20000), field);
  const auto best = upper_expectation_constant(Payoff::identity(), prob, cfg(128, 20000), 5);
  CHECK(bb.value >= best.estimate.value - 3 * bb.std_error);
}

TEST_CASE("single prior collapses every estimator") {
  const auto gf = GFunction::single_prior(1.5);
  const McProblem prob{CirParams::full(1, 1, 1, 1, 1), gf, 0, 1, 1.0};
  const auto plain = mc_expectation(Payoff::square(), prob, VolatilityControl::constant(std::sqrt(1.5)), cfg(64, 2000));
  const auto up = upper_expectation_constant(Payoff::square(), prob, cfg(64, 2000), 3);
  CHECK(up.estimate.value == plain.value);
  const auto field = ControlField::uniform(pde::SpatialGrid(8.0, 81), 1.0, 1.5);
  CHECK(upper_expectation_bangbang(Payoff::square(), prob, cfg(64, 2000), field).value == plain.value);
}

TEST_CASE("ensemble csv") {
  const McProblem prob{CirParams::full(1, 1, 1, 1, 1), kBand, 0, 1, 1.0};
  const auto ens = simulate(prob, VolatilityControl::constant(1.0), cfg(8, 3));
  std::ostringstream os;
  write_ensemble_csv(ens, os);
  const std::string text = os.str();
  CHECK(text.rfind("path_index,terminal,running_min\n0,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
