#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "gcir/core.hpp"

// Explicit monotone finite differences for
//
//   u_t + (d1 - b1 x) u_x + 2 G((d2 - b2 x) u_x + sigma^2 x / 2 u_xx) = 0,
//   u(t', x) = phi(x),
//
// on [0, t'] x [0, x_max], stepping backward from the terminal slice. With
// 2G(a) = sup_q q a over the variance band this is an HJB equation and each
// node update is the max over the two band endpoints of an upwinded linear
// operator.

namespace gcir::pde {

/// Uniform nodes x_i = i * dx on [0, x_max]; x_0 = 0 and x_{nx-1} = x_max exactly.
class SpatialGrid {
 public:
  SpatialGrid(double x_max, std::size_t nx);

  /// Grid with spacing as close as possible to dx (nx rounded up).
  static SpatialGrid with_spacing(double x_max, double dx);

  double x_max() const { return x_max_; }
  std::size_t nx() const { return nx_; }
  double dx() const { return dx_; }
  double node(std::size_t i) const { return i + 1 == nx_ ? x_max_ : static_cast<double>(i) * dx_; }

  /// Index of the node nearest to x, clamped into the grid.
  std::size_t nearest(double x) const;

 private:
  double x_max_;
  std::size_t nx_;
  double dx_;
};

/// Truncation point for a query at x_query: mean reversion keeps mass
/// below a few multiples of the long-run level.
double default_x_max(const CirParams& params, const GFunction& gf, double x_query);

struct PdeProblem {
  CirParams params;
  GFunction gf;
  Payoff payoff;
  double t_prime = 1.0;

  void validate() const;
};

/// How the nonlinearity is resolved at each node.
enum class Nonlinearity {
  /// max over {lo, hi} of the upwinded operator; monotone for any data.
  UpwindMax,
  /// pick q from the centered second-order argument, then evaluate the
  /// upwinded operator at that q.
  CenteredFreeze,
  /// fixed q = sigma_hi_sq; the plain linear advection-diffusion scheme.
  LinearReference,
};

struct SolveOptions {
  /// Explicit time step bound; must not exceed cfl_dt.
  std::optional<double> dt_cap;
  double cfl_fraction = 0.9;
  /// Upper bound on the number of stored time levels (terminal and initial
  /// levels are always kept). The full history is rarely needed and can be
  /// hundreds of megabytes on fine grids.
  std::size_t max_stored_levels = 1025;
  Nonlinearity nonlinearity = Nonlinearity::UpwindMax;
};

struct PdeSolution {
  SpatialGrid grid;
  PdeProblem problem;
  /// Ascending stored time levels.
  std::vector<double> times;
  /// values[k][i] = u(times[k], x_i).
  std::vector<std::vector<double>> values;
  double dt_used = 0.0;
  std::size_t steps = 0;

  const std::vector<double>& initial() const { return values.front(); }
  const std::vector<double>& terminal() const { return values.back(); }
};

/// Largest dt with dt * (hi sigma^2 x_max / dx^2 + A / dx) <= 1, where A is
/// the largest |d1 - b1 x| + hi |d2 - b2 x| over the nodes.
double cfl_dt(const SpatialGrid& grid, const CirParams& params, const GFunction& gf);

/// phi sampled at the nodes.
std::vector<double> terminal_values(const PdeProblem& problem, const SpatialGrid& grid);

PdeSolution solve(const PdeProblem& problem, const SpatialGrid& grid,
                  const SolveOptions& opts = {});

/// Same stepping as solve() over [t_from, t_to] from the supplied terminal slice.
PdeSolution solve_segment(const PdeProblem& problem, const SpatialGrid& grid, double t_from,
                          double t_to, std::span<const double> terminal,
                          const SolveOptions& opts = {});

/// One backward step of size dt. Exposed for the per-step comparison tests.
void step(const PdeProblem& problem, const SpatialGrid& grid, double dt, Nonlinearity mode,
          std::span<const double> u, std::span<double> out);

/// Bilinear interpolation in (t, x); exact at stored nodes.
double evaluate(const PdeSolution& sol, double t, double x);

/// argmax q of 2G(a_i) with a_i = (d2 - b2 x_i) D1 u + sigma^2 x_i / 2 D2 u,
/// centered differences, at every stored level. Entries are lo or hi.
std::vector<std::vector<double>> optimal_control_field(const PdeSolution& sol);

/// CSV with header t,x,u, time-outer, shortest round-trip numbers.
void write_csv(const PdeSolution& sol, std::ostream& os);

}  // namespace gcir::pde
