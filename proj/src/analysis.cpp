#include "gcir/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "gcir/closed_form.hpp"
#include "gcir/format.hpp"
#include "gcir/parallel.hpp"
#include "gcir/philox.hpp"

namespace gcir::analysis {

void RateStudy::write_csv(std::ostream& os) const {
  os << "h,error\n";
  for (std::size_t i = 0; i < meshes.size(); ++i)
    os << fmt_shortest(meshes[i]) << ',' << fmt_shortest(errors[i]) << '\n';
}

RateStudy make_rate_study(std::vector<double> meshes, std::vector<double> errors) {
  if (meshes.size() != errors.size()) throw ValidationError("RateStudy: size mismatch");
  for (std::size_t i = 1; i < meshes.size(); ++i)
    if (!(meshes[i] < meshes[i - 1])) throw ValidationError("RateStudy: meshes must strictly decrease");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (!(errors[i] > 0.0)) continue;
    const double lx = std::log(meshes[i]);
    const double ly = std::log(errors[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  RateStudy r{std::move(meshes), std::move(errors), std::numeric_limits<double>::quiet_NaN(),
              std::numeric_limits<double>::quiet_NaN()};
  if (n >= 2) {
    const double nn = static_cast<double>(n);
    const double den = nn * sxx - sx * sx;
    r.fitted_slope = (nn * sxy - sx * sy) / den;
    r.fitted_intercept = (sy - r.fitted_slope * sx) / nn;
  }
  return r;
}

MeshList dyadic_meshes(int k_lo, int k_hi) {
  if (k_lo < 0 || k_hi < k_lo || k_hi > 30) throw ValidationError("dyadic_meshes: bad exponent range");
  MeshList m;
  for (int k = k_lo; k <= k_hi; ++k) m.push_back(std::uint64_t{1} << k);
  return m;
}

namespace {

constexpr std::size_t kChunk = 512;

void check_meshes(const MeshList& meshes) {
  if (meshes.size() < 3) throw ValidationError("rate study: need at least 3 meshes");
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (meshes[i] < 1) throw ValidationError("rate study: step counts must be >= 1");
    if (i > 0 && !(meshes[i] > meshes[i - 1]))
      throw ValidationError("rate study: step counts must strictly increase");
  }
}

// Per-slot sums over all paths. Paths are grouped in fixed chunks that are
// reduced pairwise, so the result does not depend on the worker count.
template <class PathFn>
std::vector<double> chunked_slot_sums(std::size_t n_paths, std::size_t slots, PathFn&& per_path) {
  const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
  std::vector<double> partial(n_chunks * slots, 0.0);
  parallel::parallel_for(n_chunks, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      std::span<double> acc(partial.data() + c * slots, slots);
      const std::size_t end = std::min(n_paths, (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) per_path(i, acc);
    }
  });
  std::vector<double> out(slots);
  std::vector<double> column(n_chunks);
  for (std::size_t s = 0; s < slots; ++s) {
    for (std::size_t c = 0; c < n_chunks; ++c) column[c] = partial[c * slots + s];
    out[s] = parallel::pairwise_sum(column);
  }
  return out;
}

std::vector<double> theta_grid(const GFunction& gf, std::size_t n_theta) {
  if (gf.degenerate()) return {gf.sigma_hi()};
  if (n_theta < 2) throw ValidationError("n_theta must be >= 2");
  std::vector<double> g(n_theta);
  for (std::size_t j = 0; j < n_theta; ++j)
    g[j] = j + 1 == n_theta
               ? gf.sigma_hi()
               : gf.sigma_lo() + (gf.sigma_hi() - gf.sigma_lo()) * static_cast<double>(j) /
                                     static_cast<double>(n_theta - 1);
  return g;
}

double span_of(const sim::McProblem& prob) {
  const double span = prob.t_prime - prob.t;
  if (!(span > 0.0)) throw ValidationError("rate study: need t < t_prime");
  return span;
}

}  // namespace

RateStudy increment_moment_study(const sim::McProblem& prob, const sim::EulerConfig& config_base,
                                 const MeshList& meshes, std::size_t n_theta) {
  prob.validate();
  config_base.validate();
  check_meshes(meshes);
  const double span = span_of(prob);
  const auto thetas = theta_grid(prob.gf, n_theta);
  const std::size_t m = thetas.size();
  const rng::NormalStream normals(config_base.seed);
  const auto proj = config_base.projection;

  std::vector<double> hs, errs;
  for (std::uint64_t n : meshes) {
    const double h = span / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);
    const double half = 0.5 * h;
    const double sqrt_half = std::sqrt(half);
    // slot j * n + k: sum over paths of U^2 at the midpoint of interval k under thetas[j].
    const auto sums = chunked_slot_sums(config_base.n_paths, m * n, [&](std::size_t i, std::span<double> acc) {
      double x[16];
      std::vector<double> xv;
      double* xs = x;
      if (m > 16) {
        xv.assign(m, 0.0);
        xs = xv.data();
      }
      std::fill(xs, xs + m, prob.x0);
      for (std::uint64_t k = 0; k < n; ++k) {
        // First half of the Brownian increment, then the second half.
        const auto z = normals.pair(i, static_cast<std::uint32_t>(k), 1);
        const double z_full = (z[0] + z[1]) * std::numbers::sqrt2 * 0.5;
        for (std::size_t j = 0; j < m; ++j) {
          const auto mid = sim::euler_increments(prob.params, proj, xs[j], thetas[j], half, sqrt_half, z[0]);
          const double u = mid.drift + mid.diffusion;
          acc[j * n + k] += u * u;
          xs[j] = sim::euler_step(prob.params, proj, xs[j], thetas[j], h, sqrt_h, z_full);
        }
      }
    });
    const double worst = *std::max_element(sums.begin(), sums.end());
    hs.push_back(h);
    errs.push_back(worst / static_cast<double>(config_base.n_paths));
  }
  return make_rate_study(std::move(hs), std::move(errs));
}

RateStudy strong_error_study(const sim::McProblem& prob, const sim::EulerConfig& config_base,
                             const MeshList& meshes, std::optional<double> theta) {
  prob.validate();
  config_base.validate();
  check_meshes(meshes);
  const double span = span_of(prob);
  const double th = theta.value_or(prob.gf.sigma_hi());
  sim::VolatilityControl::constant(th).validate(prob.gf);
  const std::uint64_t n_ref = meshes.back();
  for (std::uint64_t n : meshes)
    if (n_ref % n != 0) throw ValidationError("strong_error_study: every mesh must divide the reference");

  const std::size_t n_meshes = meshes.size();
  const rng::NormalStream normals(config_base.seed);
  const auto proj = config_base.projection;
  const double h_ref = span / static_cast<double>(n_ref);

  const auto sums = chunked_slot_sums(config_base.n_paths, n_meshes, [&](std::size_t i, std::span<double> acc) {
    std::vector<double> z(n_ref);
    std::vector<double> xf(n_ref + 1);
    xf[0] = prob.x0;
    const double sqrt_h_ref = std::sqrt(h_ref);
    for (std::uint64_t k = 0; k < n_ref; ++k) {
      z[k] = normals.normal(i, k);
      xf[k + 1] = sim::euler_step(prob.params, proj, xf[k], th, h_ref, sqrt_h_ref, z[k]);
    }
    for (std::size_t mi = 0; mi < n_meshes; ++mi) {
      const std::uint64_t n = meshes[mi];
      const std::uint64_t r = n_ref / n;
      const double h = span / static_cast<double>(n);
      const double sqrt_h = std::sqrt(h);
      const double inv_sqrt_r = 1.0 / std::sqrt(static_cast<double>(r));
      double x = prob.x0;
      double sup = 0.0;
      for (std::uint64_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::uint64_t l = 0; l < r; ++l) s += z[j * r + l];
        x = sim::euler_step(prob.params, proj, x, th, h, sqrt_h, s * inv_sqrt_r);
        const double d = x - xf[(j + 1) * r];
        sup = std::max(sup, d * d);
      }
      acc[mi] += sup;
    }
  });

  std::vector<double> hs, errs;
  for (std::size_t mi = 0; mi < n_meshes; ++mi) {
    hs.push_back(span / static_cast<double>(meshes[mi]));
    errs.push_back(sums[mi] / static_cast<double>(config_base.n_paths));
  }
  return make_rate_study(std::move(hs), std::move(errs));
}

NegativityReport negativity_diagnostic(const sim::McProblem& prob, const sim::EulerConfig& config_base,
                                       const MeshList& meshes, std::size_t n_theta) {
  prob.validate();
  config_base.validate();
  check_meshes(meshes);
  const double span = span_of(prob);
  const auto thetas = theta_grid(prob.gf, n_theta);
  const std::size_t m = thetas.size();
  const rng::NormalStream normals(config_base.seed);
  const auto proj = config_base.projection;

  NegativityReport rep;
  std::vector<double> hs, errs;
  for (std::uint64_t n : meshes) {
    const double h = span / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);
    // slots [0, m): sum of X_T^-; [m, 2m): count of paths dipping below 0.
    const auto sums = chunked_slot_sums(config_base.n_paths, 2 * m, [&](std::size_t i, std::span<double> acc) {
      std::vector<double> x(m, prob.x0);
      std::vector<double> lo(m, prob.x0);
      for (std::uint64_t k = 0; k < n; ++k) {
        const double z = normals.normal(i, k);
        for (std::size_t j = 0; j < m; ++j) {
          x[j] = sim::euler_step(prob.params, proj, x[j], thetas[j], h, sqrt_h, z);
          lo[j] = std::min(lo[j], x[j]);
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        acc[j] += std::max(-x[j], 0.0);
        if (lo[j] < 0.0) acc[m + j] += 1.0;
      }
    });
    std::size_t worst = 0;
    for (std::size_t j = 1; j < m; ++j)
      if (sums[j] >= sums[worst]) worst = j;
    const double np = static_cast<double>(config_base.n_paths);
    hs.push_back(h);
    errs.push_back(sums[worst] / np);
    rep.negative_fraction.push_back(sums[m + worst] / np);
    rep.worst_theta.push_back(thetas[worst]);
  }
  rep.terminal_negative_part = make_rate_study(std::move(hs), std::move(errs));
  return rep;
}

double markov_semigroup_check(const pde::PdeProblem& problem, const pde::SpatialGrid& grid,
                              double gamma, const pde::SolveOptions& opts) {
  problem.validate();
  if (!(gamma >= 0.0 && gamma <= problem.t_prime))
    throw ValidationError("markov_semigroup_check: gamma must lie in [0, t_prime]");
  const double split = problem.t_prime - gamma;
  const auto phi = pde::terminal_values(problem, grid);
  const auto one_shot = pde::solve_segment(problem, grid, 0.0, problem.t_prime, phi, opts);
  const auto late = pde::solve_segment(problem, grid, split, problem.t_prime, phi, opts);
  const auto early = pde::solve_segment(problem, grid, 0.0, split, late.initial(), opts);
  double d = 0.0;
  for (std::size_t i = 0; i < grid.nx(); ++i)
    d = std::max(d, std::abs(early.initial()[i] - one_shot.initial()[i]));
  return d;
}

std::optional<OracleValues> oracle_for(const pde::PdeProblem& problem, double t, double x0) {
  using closed_form::MomentQuery;
  const MomentQuery q{problem.params, t, problem.t_prime, x0};
  const Payoff& phi = problem.payoff;
  const bool neg = phi.is_negated();
  const auto flip = [neg](OracleValues v) {
    return neg ? OracleValues{-v.lower, -v.upper} : v;
  };
  switch (problem.params.regime) {
    case Regime::DriftOnly:
      if (phi.kind() == Payoff::Kind::Identity) {
        const double m = closed_form::mean_drift_case(q);
        return flip({m, m});
      }
      if (phi.kind() == Payoff::Kind::Square) {
        return flip({closed_form::second_moment_drift_case(q, problem.gf.sigma_hi_sq()),
                     closed_form::second_moment_drift_case(q, problem.gf.sigma_lo_sq())});
      }
      return std::nullopt;
    case Regime::QvOnly:
      if (phi.kind() == Payoff::Kind::Identity)
        return flip({closed_form::mean_upper_qv_case(q, problem.gf),
                     closed_form::mean_lower_qv_case(q, problem.gf)});
      return std::nullopt;
    case Regime::Full:
      return std::nullopt;
  }
  return std::nullopt;
}

double pde_tolerance(double reference) { return 1e-2 * (1.0 + std::abs(reference)); }

double mc_tolerance(double std_error) { return 3.0 * std_error + kEulerBiasAllowance; }

namespace {

RouteRow against_reference(std::string route, double value, double se, double reference, double tol) {
  RouteRow r{std::move(route), value, se, reference, value - reference, tol, false};
  r.pass = std::abs(r.discrepancy) <= tol;
  return r;
}

// value <= bound + tol (sign = +1) or value >= bound - tol (sign = -1).
RouteRow one_sided(std::string route, double value, double se, double bound, double tol, double sign) {
  RouteRow r{std::move(route), value, se, bound, value - bound, tol, false};
  r.pass = sign * r.discrepancy <= tol;
  return r;
}

}  // namespace

TriangulationReport triangulation_report(const pde::PdeProblem& problem, const pde::SpatialGrid& grid,
                                         const TriangulationConfig& config) {
  problem.validate();
  TriangulationReport rep;
  rep.oracle = oracle_for(problem, config.t, config.x0);

  const auto sol_up = pde::solve(problem, grid, config.pde_options);
  pde::PdeProblem neg_problem = problem;
  neg_problem.payoff = problem.payoff.negated();
  const auto sol_lo = pde::solve(neg_problem, grid, config.pde_options);
  const double pde_up = pde::evaluate(sol_up, config.t, config.x0);
  const double pde_lo = -pde::evaluate(sol_lo, config.t, config.x0);

  const sim::McProblem mp{problem.params, problem.gf, config.t, problem.t_prime, config.x0};
  const auto mc_const = sim::upper_expectation_constant(problem.payoff, mp, config.euler, config.n_theta);
  const auto field = sim::ControlField::from_solution(sol_up);
  const auto mc_bb = sim::upper_expectation_bangbang(problem.payoff, mp, config.euler, field);
  const auto mc_lo = sim::lower_expectation(problem.payoff, mp, config.euler, sim::ConstantSearch{config.n_theta});

  if (rep.oracle) {
    const auto& o = *rep.oracle;
    rep.rows.push_back(against_reference("pde_upper", pde_up, 0.0, o.upper, pde_tolerance(o.upper)));
    rep.rows.push_back(against_reference("pde_lower", pde_lo, 0.0, o.lower, pde_tolerance(o.lower)));
    rep.rows.push_back(against_reference("mc_upper_constant", mc_const.estimate.value, mc_const.estimate.std_error,
                                         o.upper, mc_tolerance(mc_const.estimate.std_error)));
    rep.rows.push_back(against_reference("mc_upper_bangbang", mc_bb.value, mc_bb.std_error, o.upper,
                                         mc_tolerance(mc_bb.std_error)));
    rep.rows.push_back(against_reference("mc_lower_constant", mc_lo.estimate.value, mc_lo.estimate.std_error,
                                         o.lower, mc_tolerance(mc_lo.estimate.std_error)));
  } else {
    // Every simulated prior is admissible, so Monte Carlo can only
    // undershoot the PDE upper value and overshoot its lower value.
    rep.rows.push_back({"pde_upper", pde_up, 0.0, std::nullopt, 0.0, 0.0, true});
    rep.rows.push_back({"pde_lower", pde_lo, 0.0, std::nullopt, 0.0, 0.0, true});
    rep.rows.push_back(one_sided("mc_upper_constant", mc_const.estimate.value, mc_const.estimate.std_error,
                                 pde_up, mc_tolerance(mc_const.estimate.std_error) + pde_tolerance(pde_up), 1.0));
    rep.rows.push_back(one_sided("mc_upper_bangbang", mc_bb.value, mc_bb.std_error, pde_up,
                                 mc_tolerance(mc_bb.std_error) + pde_tolerance(pde_up), 1.0));
    rep.rows.push_back(one_sided("mc_lower_constant", mc_lo.estimate.value, mc_lo.estimate.std_error, pde_lo,
                                 mc_tolerance(mc_lo.estimate.std_error) + pde_tolerance(pde_lo), -1.0));
  }
  rep.rows.push_back(one_sided("pde_upper_minus_lower", pde_up - pde_lo, 0.0, 0.0, 1e-12, -1.0));
  if (problem.gf.degenerate()) {
    const double se = std::hypot(mc_const.estimate.std_error, mc_lo.estimate.std_error);
    rep.rows.push_back(against_reference("pde_band_gap", pde_up - pde_lo, 0.0, 0.0, pde_tolerance(pde_up)));
    rep.rows.push_back(against_reference("mc_band_gap", mc_const.estimate.value - mc_lo.estimate.value, se, 0.0,
                                         3.0 * se));
  }
  for (const auto& r : rep.rows) rep.all_pass = rep.all_pass && r.pass;
  return rep;
}

void TriangulationReport::write_text(std::ostream& os) const {
  if (oracle)
    os << "closed form: upper " << fmt_shortest(oracle->upper) << "  lower " << fmt_shortest(oracle->lower) << '\n';
  else
    os << "closed form: not available for this regime/payoff\n";
  os << std::left << std::setw(24) << "route" << std::right << std::setw(14) << "value" << std::setw(12)
     << "std_error" << std::setw(14) << "reference" << std::setw(14) << "discrepancy" << std::setw(12)
     << "tolerance" << "  status\n";
  os << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    os << std::left << std::setw(24) << r.route << std::right << std::setw(14) << r.value << std::setw(12)
       << r.std_error << std::setw(14);
    if (r.reference)
      os << *r.reference;
    else
      os << "-";
    os << std::setw(14) << r.discrepancy << std::setw(12) << r.tolerance << "  " << (r.pass ? "ok" : "FAIL")
       << '\n';
  }
  os.unsetf(std::ios::floatfield);
  os << (all_pass ? "all checks passed" : "CHECKS FAILED") << '\n';
}

}  // namespace gcir::analysis
