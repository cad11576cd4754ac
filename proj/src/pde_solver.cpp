#include "gcir/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "gcir/format.hpp"

namespace gcir::pde {

SpatialGrid::SpatialGrid(double x_max, std::size_t nx) : x_max_(x_max), nx_(nx) {
  if (!(std::isfinite(x_max) && x_max > 0.0)) throw ValidationError("SpatialGrid: x_max must be > 0");
  if (nx < 16) throw ValidationError("SpatialGrid: need at least 16 nodes");
  dx_ = x_max / static_cast<double>(nx - 1);
}

SpatialGrid SpatialGrid::with_spacing(double x_max, double dx) {
  if (!(dx > 0.0)) throw ValidationError("SpatialGrid: dx must be > 0");
  const auto cells = static_cast<std::size_t>(std::ceil(x_max / dx - 1e-9));
  return SpatialGrid(x_max, std::max<std::size_t>(cells + 1, 16));
}

std::size_t SpatialGrid::nearest(double x) const {
  if (!(x > 0.0)) return 0;
  const double r = std::round(x / dx_);
  if (r >= static_cast<double>(nx_ - 1)) return nx_ - 1;
  return static_cast<std::size_t>(r);
}

double default_x_max(const CirParams& params, const GFunction& gf, double x_query) {
  double beta_min = std::numeric_limits<double>::infinity();
  if (params.beta1 > 0.0) beta_min = std::min(beta_min, params.beta1);
  if (params.beta2 > 0.0) beta_min = std::min(beta_min, params.beta2);
  if (!std::isfinite(beta_min)) throw ValidationError("default_x_max: no mean reversion");
  const double level = (params.delta1 + gf.sigma_hi_sq() * params.delta2) / beta_min;
  return std::max(5.0 * x_query, 4.0 * level + 5.0);
}

void PdeProblem::validate() const {
  params.validate();
  if (!(std::isfinite(t_prime) && t_prime > 0.0)) throw ValidationError("PdeProblem: t_prime must be > 0");
}

double cfl_dt(const SpatialGrid& grid, const CirParams& p, const GFunction& gf) {
  double a = 0.0;
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    const double x = grid.node(i);
    a = std::max(a, std::abs(p.delta1 - p.beta1 * x) + gf.sigma_hi_sq() * std::abs(p.delta2 - p.beta2 * x));
  }
  const double dx = grid.dx();
  const double rate = gf.sigma_hi_sq() * p.sigma * p.sigma * grid.x_max() / (dx * dx) + a / dx;
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / rate;
}

std::vector<double> terminal_values(const PdeProblem& problem, const SpatialGrid& grid) {
  std::vector<double> v(grid.nx());
  for (std::size_t i = 0; i < grid.nx(); ++i) v[i] = problem.payoff(grid.node(i));
  return v;
}

namespace {

struct Stencil {
  double d_fwd;   // forward difference (backward one at x_max)
  double d_bwd;   // backward difference (forward one at x = 0)
  double d_ctr;
  double d2;
};

// At x = 0 the diffusion vanishes and only the one-sided difference exists.
// At x_max the solution is continued linearly: D2 = 0 and the missing
// forward difference equals the backward one.
Stencil stencil(std::span<const double> u, std::size_t i, double dx) {
  const std::size_t n = u.size();
  Stencil s{};
  if (i == 0) {
    s.d_fwd = s.d_bwd = s.d_ctr = (u[1] - u[0]) / dx;
    s.d2 = 0.0;
  } else if (i + 1 == n) {
    s.d_fwd = s.d_bwd = s.d_ctr = (u[i] - u[i - 1]) / dx;
    s.d2 = 0.0;
  } else {
    s.d_fwd = (u[i + 1] - u[i]) / dx;
    s.d_bwd = (u[i] - u[i - 1]) / dx;
    s.d_ctr = (u[i + 1] - u[i - 1]) / (2.0 * dx);
    s.d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
  }
  return s;
}

struct NodeCoeffs {
  double b1;    // dt drift
  double b2;    // d<B> drift
  double diff;  // sigma^2 x / 2
};

NodeCoeffs coeffs(const CirParams& p, double x) {
  return {p.delta1 - p.beta1 * x, p.delta2 - p.beta2 * x, 0.5 * p.sigma * p.sigma * x};
}

double upwind_operator(const NodeCoeffs& c, const Stencil& s, double q) {
  const double b = c.b1 + q * c.b2;
  const double drift = b > 0.0 ? b * s.d_fwd : b * s.d_bwd;
  return drift + q * c.diff * s.d2;
}

}  // namespace

void step(const PdeProblem& problem, const SpatialGrid& grid, double dt, Nonlinearity mode,
          std::span<const double> u, std::span<double> out) {
  const GFunction& gf = problem.gf;
  const double lo = gf.sigma_lo_sq();
  const double hi = gf.sigma_hi_sq();
  const double dx = grid.dx();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const NodeCoeffs c = coeffs(problem.params, grid.node(i));
    const Stencil s = stencil(u, i, dx);
    double h = 0.0;
    switch (mode) {
      case Nonlinearity::UpwindMax:
        h = std::max(upwind_operator(c, s, lo), upwind_operator(c, s, hi));
        break;
      case Nonlinearity::CenteredFreeze:
        h = upwind_operator(c, s, gf.argmax(c.b2 * s.d_ctr + c.diff * s.d2));
        break;
      case Nonlinearity::LinearReference:
        h = upwind_operator(c, s, hi);
        break;
    }
    out[i] = u[i] + dt * h;
  }
}

PdeSolution solve_segment(const PdeProblem& problem, const SpatialGrid& grid, double t_from,
                          double t_to, std::span<const double> terminal, const SolveOptions& opts) {
  problem.validate();
  if (!(t_from >= 0.0 && t_from <= t_to && t_to <= problem.t_prime))
    throw ValidationError("solve_segment: need 0 <= t_from <= t_to <= t_prime");
  if (terminal.size() != grid.nx())
    throw ValidationError("solve_segment: terminal slice has the wrong number of nodes");
  if (!(opts.cfl_fraction > 0.0 && opts.cfl_fraction <= 1.0))
    throw ValidationError("solve_segment: cfl_fraction must lie in (0, 1]");
  if (opts.max_stored_levels < 2) throw ValidationError("solve_segment: must store at least 2 levels");

  const double cfl = cfl_dt(grid, problem.params, problem.gf);
  double dt_max = opts.cfl_fraction * cfl;
  if (opts.dt_cap) {
    if (!(*opts.dt_cap > 0.0)) throw ValidationError("solve_segment: dt_cap must be > 0");
    if (*opts.dt_cap > cfl) {
      std::ostringstream msg;
      msg << "solve_segment: dt_cap " << *opts.dt_cap << " violates the CFL bound " << cfl;
      throw ValidationError(msg.str());
    }
    dt_max = *opts.dt_cap;
  }

  PdeSolution sol{grid, problem, {}, {}, 0.0, 0};
  std::vector<double> cur(terminal.begin(), terminal.end());
  const double len = t_to - t_from;
  if (len == 0.0) {
    sol.times = {t_to};
    sol.values = {std::move(cur)};
    return sol;
  }

  const double n_real = std::ceil(len / dt_max);
  if (!(n_real < 1e12)) throw ValidationError("solve_segment: time step too small");
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(n_real));
  const double dt = len / static_cast<double>(n);
  const std::size_t stride = (n + opts.max_stored_levels - 2) / (opts.max_stored_levels - 1);

  sol.dt_used = dt;
  sol.steps = n;
  sol.times.push_back(t_to);
  sol.values.push_back(cur);
  std::vector<double> next(cur.size());
  for (std::size_t k = 1; k <= n; ++k) {
    step(problem, grid, dt, opts.nonlinearity, cur, next);
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (!std::isfinite(next[i])) {
        std::ostringstream msg;
        msg << "pde solve: non-finite value at time level " << k << " (t = "
            << t_to - static_cast<double>(k) * dt << "), node " << i << " (x = " << grid.node(i) << ")";
        throw NumericalError(msg.str());
      }
    }
    cur.swap(next);
    if (k == n) {
      sol.times.push_back(t_from);
      sol.values.push_back(cur);
    } else if (k % stride == 0) {
      sol.times.push_back(t_to - static_cast<double>(k) * dt);
      sol.values.push_back(cur);
    }
  }
  std::reverse(sol.times.begin(), sol.times.end());
  std::reverse(sol.values.begin(), sol.values.end());
  return sol;
}

PdeSolution solve(const PdeProblem& problem, const SpatialGrid& grid, const SolveOptions& opts) {
  problem.validate();
  const auto phi = terminal_values(problem, grid);
  return solve_segment(problem, grid, 0.0, problem.t_prime, phi, opts);
}

namespace {

double lerp_exact(double a, double b, double s) {
  if (s == 0.0) return a;
  if (s == 1.0) return b;
  return a + s * (b - a);
}

}  // namespace

double evaluate(const PdeSolution& sol, double t, double x) {
  const auto& ts = sol.times;
  if (!(t >= ts.front() && t <= ts.back()))
    throw ValidationError("evaluate: t outside the solved time range");
  if (!(x >= 0.0 && x <= sol.grid.x_max())) throw ValidationError("evaluate: x outside [0, x_max]");

  const SpatialGrid& g = sol.grid;
  std::size_t i = std::min(static_cast<std::size_t>(x / g.dx()), g.nx() - 2);
  double sx = (x - g.node(i)) / (g.node(i + 1) - g.node(i));
  sx = std::clamp(sx, 0.0, 1.0);

  auto at_level = [&](std::size_t k) { return lerp_exact(sol.values[k][i], sol.values[k][i + 1], sx); };
  if (ts.size() == 1) return at_level(0);

  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t k = it == ts.end() ? ts.size() - 2 : static_cast<std::size_t>(it - ts.begin()) - 1;
  k = std::min(k, ts.size() - 2);
  const double st = std::clamp((t - ts[k]) / (ts[k + 1] - ts[k]), 0.0, 1.0);
  return lerp_exact(at_level(k), at_level(k + 1), st);
}

std::vector<std::vector<double>> optimal_control_field(const PdeSolution& sol) {
  const auto& p = sol.problem.params;
  std::vector<std::vector<double>> field;
  field.reserve(sol.values.size());
  for (const auto& u : sol.values) {
    std::vector<double> q(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      const NodeCoeffs c = coeffs(p, sol.grid.node(i));
      const Stencil s = stencil(u, i, sol.grid.dx());
      q[i] = sol.problem.gf.argmax(c.b2 * s.d_ctr + c.diff * s.d2);
    }
    field.push_back(std::move(q));
  }
  return field;
}

void write_csv(const PdeSolution& sol, std::ostream& os) {
  os << "t,x,u\n";
  for (std::size_t k = 0; k < sol.times.size(); ++k)
    for (std::size_t i = 0; i < sol.grid.nx(); ++i)
      os << fmt_shortest(sol.times[k]) << ',' << fmt_shortest(sol.grid.node(i)) << ',' << fmt_shortest(sol.values[k][i])
         << '\n';
}

}  // namespace gcir::pde
