#include "gcir/simulator.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <sstream>

#include "gcir/format.hpp"
#include "gcir/parallel.hpp"
#include "gcir/philox.hpp"

namespace gcir::sim {

ControlField ControlField::from_solution(const pde::PdeSolution& sol) {
  return {sol.grid, sol.times, pde::optimal_control_field(sol)};
}

ControlField ControlField::uniform(const pde::SpatialGrid& grid, double t_prime, double q) {
  return {grid, {0.0, t_prime}, {std::vector<double>(grid.nx(), q), std::vector<double>(grid.nx(), q)}};
}

double ControlField::variance_at(double t, double x) const {
  std::size_t k = 0;
  if (times.size() > 1) {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end()) {
      k = times.size() - 1;
    } else {
      k = static_cast<std::size_t>(it - times.begin());
      if (k > 0 && t - times[k - 1] <= times[k] - t) --k;
    }
  }
  return q[k][grid.nearest(x)];
}

VolatilityControl VolatilityControl::piecewise(std::vector<double> breakpoints,
                                               std::vector<double> thetas) {
  if (thetas.size() != breakpoints.size() + 1)
    throw ValidationError("piecewise control: need one more theta than breakpoints");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) ||
      std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end())
    throw ValidationError("piecewise control: breakpoints must be strictly ascending");
  return VolatilityControl(PiecewiseConstant{std::move(breakpoints), std::move(thetas)});
}

VolatilityControl VolatilityControl::bang_bang(std::shared_ptr<const ControlField> field) {
  if (!field || field->times.empty() || field->q.size() != field->times.size())
    throw ValidationError("bang-bang control: malformed control field");
  return VolatilityControl(BangBang{std::move(field)});
}

namespace {

void check_theta(double theta, const GFunction& gf) {
  if (!(theta >= gf.sigma_lo() && theta <= gf.sigma_hi())) {
    std::ostringstream msg;
    msg << "control value " << theta << " outside [" << gf.sigma_lo() << ", " << gf.sigma_hi() << "]";
    throw ValidationError(msg.str());
  }
}

}  // namespace

void VolatilityControl::validate(const GFunction& gf) const {
  if (const auto* c = std::get_if<Constant>(&kind_)) {
    check_theta(c->theta, gf);
  } else if (const auto* pc = std::get_if<PiecewiseConstant>(&kind_)) {
    for (double th : pc->thetas) check_theta(th, gf);
  } else {
    for (const auto& level : std::get<BangBang>(kind_).field->q)
      for (double v : level) check_theta(std::sqrt(v), gf);
  }
}

double VolatilityControl::theta(double t, double x) const {
  if (const auto* c = std::get_if<Constant>(&kind_)) return c->theta;
  if (const auto* pc = std::get_if<PiecewiseConstant>(&kind_)) {
    const auto it = std::upper_bound(pc->breakpoints.begin(), pc->breakpoints.end(), t);
    return pc->thetas[static_cast<std::size_t>(it - pc->breakpoints.begin())];
  }
  return std::sqrt(std::get<BangBang>(kind_).field->variance_at(t, x));
}

void EulerConfig::validate() const {
  if (n_steps < 1 || n_steps > (std::uint64_t{1} << 32))
    throw ValidationError("EulerConfig: n_steps must lie in [1, 2^32]");
  if (n_paths < 1) throw ValidationError("EulerConfig: n_paths must be >= 1");
}

void McProblem::validate() const {
  params.validate();
  if (!(std::isfinite(t) && t >= 0.0 && std::isfinite(t_prime) && t_prime >= t))
    throw ValidationError("McProblem: need 0 <= t <= t_prime");
  if (!(std::isfinite(x0) && x0 >= 0.0)) throw ValidationError("McProblem: x0 must be >= 0");
}

namespace {

[[noreturn]] void non_finite(std::uint64_t path, std::uint64_t k) {
  std::ostringstream msg;
  msg << "euler path " << path << ": non-finite state after step " << k;
  throw NumericalError(msg.str());
}

void validate_all(const McProblem& prob, const VolatilityControl& control, const EulerConfig& config) {
  prob.validate();
  config.validate();
  control.validate(prob.gf);
}

PathResult run_path(const McProblem& prob, const VolatilityControl& control,
                    const EulerConfig& config, const rng::NormalStream& normals,
                    std::uint64_t path_index, const std::function<void(const StepRecord&)>* observer) {
  double x = prob.x0;
  double lo = x;
  const double span = prob.t_prime - prob.t;
  if (span == 0.0) return {x, lo};
  const double h = span / static_cast<double>(config.n_steps);
  const double sqrt_h = std::sqrt(h);
  for (std::uint64_t k = 0; k < config.n_steps; ++k) {
    const double tk = prob.t + static_cast<double>(k) * h;
    const double theta = control.theta(tk, x);
    const double z = normals.normal(path_index, k);
    const StepParts s = euler_increments(prob.params, config.projection, x, theta, h, sqrt_h, z);
    if (observer && *observer) (*observer)({k, tk, x, theta, s.diffusion});
    x = x + s.drift + s.diffusion;
    if (!std::isfinite(x)) non_finite(path_index, k);
    lo = std::min(lo, x);
  }
  return {x, lo};
}

}  // namespace

PathResult euler_path(const McProblem& prob, const VolatilityControl& control,
                      const EulerConfig& config, std::uint64_t path_index,
                      const std::function<void(const StepRecord&)>& observer) {
  validate_all(prob, control, config);
  const rng::NormalStream normals(config.seed);
  return run_path(prob, control, config, normals, path_index, &observer);
}

PathEnsemble simulate(const McProblem& prob, const VolatilityControl& control,
                      const EulerConfig& config) {
  validate_all(prob, control, config);
  PathEnsemble ens{config, control, std::vector<double>(config.n_paths), std::vector<double>(config.n_paths)};
  const rng::NormalStream normals(config.seed);
  parallel::parallel_for(config.n_paths, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const PathResult r = run_path(prob, control, config, normals, i, nullptr);
      ens.terminal_values[i] = r.terminal;
      ens.min_values[i] = r.running_min;
    }
  });
  return ens;
}

McEstimate summarize(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n == 0) throw ValidationError("summarize: no samples");
  if (std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples[0]; }))
    return {samples[0], 0.0, n};
  const double mean = parallel::pairwise_sum(samples) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0, 1};
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (samples[i] - mean) * (samples[i] - mean);
  const double var = parallel::pairwise_sum(sq) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

McEstimate mc_expectation(const Payoff& phi, const McProblem& prob,
                          const VolatilityControl& control, const EulerConfig& config) {
  const PathEnsemble ens = simulate(prob, control, config);
  std::vector<double> v(ens.terminal_values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = phi.eval_extended(ens.terminal_values[i]);
  return summarize(v);
}

namespace {

std::vector<double> theta_grid(const GFunction& gf, std::size_t n_theta) {
  if (gf.degenerate()) return {gf.sigma_hi()};
  if (n_theta < 2) throw ValidationError("constant-control search needs n_theta >= 2");
  const double lo = gf.sigma_lo();
  const double hi = gf.sigma_hi();
  std::vector<double> g(n_theta);
  for (std::size_t j = 0; j < n_theta; ++j)
    g[j] = j + 1 == n_theta ? hi : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n_theta - 1);
  return g;
}

}  // namespace

UpperResult upper_expectation_constant(const Payoff& phi, const McProblem& prob,
                                       const EulerConfig& config, std::size_t n_theta) {
  const std::vector<double> thetas = theta_grid(prob.gf, n_theta);
  validate_all(prob, VolatilityControl::constant(thetas.back()), config);
  const std::size_t m = thetas.size();
  // samples[j * n_paths + i]: payoff of path i under thetas[j].
  std::vector<double> samples(m * config.n_paths);
  const rng::NormalStream normals(config.seed);
  const double span = prob.t_prime - prob.t;
  const double h = span / static_cast<double>(config.n_steps);
  const double sqrt_h = std::sqrt(h);

  parallel::parallel_for(config.n_paths, [&](std::size_t b, std::size_t e) {
    std::vector<double> x(m);
    for (std::size_t i = b; i < e; ++i) {
      std::fill(x.begin(), x.end(), prob.x0);
      if (span > 0.0) {
        for (std::uint64_t k = 0; k < config.n_steps; ++k) {
          const double z = normals.normal(i, k);
          for (std::size_t j = 0; j < m; ++j) {
            x[j] = euler_step(prob.params, config.projection, x[j], thetas[j], h, sqrt_h, z);
            if (!std::isfinite(x[j])) non_finite(i, k);
          }
        }
      }
      for (std::size_t j = 0; j < m; ++j) samples[j * config.n_paths + i] = phi.eval_extended(x[j]);
    }
  });

  UpperResult best{{-std::numeric_limits<double>::infinity(), 0.0, 0}, std::nullopt};
  for (std::size_t j = 0; j < m; ++j) {
    const McEstimate est = summarize(std::span<const double>(samples).subspan(j * config.n_paths, config.n_paths));
    if (est.value > best.estimate.value) best = {est, thetas[j]};
  }
  return best;
}

McEstimate upper_expectation_bangbang(const Payoff& phi, const McProblem& prob,
                                      const EulerConfig& config, const ControlField& field) {
  return mc_expectation(phi, prob, VolatilityControl::bang_bang(std::make_shared<const ControlField>(field)),
                        config);
}

UpperResult lower_expectation(const Payoff& phi, const McProblem& prob, const EulerConfig& config,
                              const UpperEstimator& estimator) {
  const Payoff neg = phi.negated();
  UpperResult r;
  if (const auto* cs = std::get_if<ConstantSearch>(&estimator)) {
    r = upper_expectation_constant(neg, prob, config, cs->n_theta);
  } else {
    const auto& fc = std::get<FieldControl>(estimator);
    r.estimate = mc_expectation(neg, prob, VolatilityControl::bang_bang(fc.field), config);
  }
  r.estimate.value = -r.estimate.value;
  return r;
}

void write_ensemble_csv(const PathEnsemble& ens, std::ostream& os) {
  os << "path_index,terminal,running_min\n";
  for (std::size_t i = 0; i < ens.terminal_values.size(); ++i)
    os << i << ',' << fmt_shortest(ens.terminal_values[i]) << ',' << fmt_shortest(ens.min_values[i]) << '\n';
}

}  // namespace gcir::sim
