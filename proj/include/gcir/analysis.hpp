#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcir/core.hpp"
#include "gcir/pde_solver.hpp"
#include "gcir/simulator.hpp"

// Empirical checks of the quantitative properties of the Euler scheme and
// of the PDE route: increment moments, strong convergence, non-negativity of
// the limit, the Markov/semigroup identity, and cross-route agreement.

namespace gcir::analysis {

/// Errors against mesh size with a least-squares fit of
/// log(error) = slope * log(h) + intercept.
struct RateStudy {
  std::vector<double> meshes;  // h, strictly decreasing
  std::vector<double> errors;
  double fitted_slope = 0.0;
  double fitted_intercept = 0.0;

  void write_csv(std::ostream& os) const;
};

/// Fits over the strictly positive errors; NaN slope with fewer than two.
RateStudy make_rate_study(std::vector<double> meshes, std::vector<double> errors);

/// Step counts n per mesh (h = (t' - t) / n). Must be strictly increasing
/// so that h decreases.
using MeshList = std::vector<std::uint64_t>;

/// Dyadic step counts 2^k for k in [k_lo, k_hi].
MeshList dyadic_meshes(int k_lo, int k_hi);

/// max over interval midpoints t of mean U_n(t)^2, U_n(t) = |X_n(t) - X_n(eta_n(t))|,
/// taken as the max over an n_theta grid of constant controls. The
/// config's n_steps is ignored; the meshes drive the runs.
RateStudy increment_moment_study(const sim::McProblem& prob, const sim::EulerConfig& config_base,
                                 const MeshList& meshes, std::size_t n_theta = 2);

/// Mean over paths of the sup over coarse grid times of |X_coarse - X_ref|^2,
/// with coarse paths driven by sums of the reference path's normals. The
/// reference uses the largest step count in the list; every entry must
/// divide it. Runs under the constant control theta (default sigma_hi).
RateStudy strong_error_study(const sim::McProblem& prob, const sim::EulerConfig& config_base,
                             const MeshList& meshes, std::optional<double> theta = std::nullopt);

struct NegativityReport {
  /// errors = worst-control mean of max(-X_{t'}, 0).
  RateStudy terminal_negative_part;
  /// Fraction of paths whose running minimum is negative, under the same worst control.
  std::vector<double> negative_fraction;
  std::vector<double> worst_theta;
};

NegativityReport negativity_diagnostic(const sim::McProblem& prob, const sim::EulerConfig& config_base,
                                       const MeshList& meshes, std::size_t n_theta = 2);

/// Solves on [t' - gamma, t'], then on [0, t' - gamma] from that slice, and
/// returns the max-norm distance at t = 0 to the one-shot solve. gamma = 0
/// and gamma = t' are no-op splits.
double markov_semigroup_check(const pde::PdeProblem& problem, const pde::SpatialGrid& grid,
                              double gamma, const pde::SolveOptions& opts = {});

/// Closed-form values for the upper and lower expectation of the problem's
/// payoff, when the regime and payoff admit one.
struct OracleValues {
  double upper;
  double lower;
};
std::optional<OracleValues> oracle_for(const pde::PdeProblem& problem, double t, double x0);

struct RouteRow {
  std::string route;
  double value = 0.0;
  double std_error = 0.0;
  std::optional<double> reference;  // value this route is checked against
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct TriangulationConfig {
  double x0 = 1.0;
  double t = 0.0;
  sim::EulerConfig euler;
  std::size_t n_theta = 5;
  pde::SolveOptions pde_options;
};

struct TriangulationReport {
  std::optional<OracleValues> oracle;
  std::vector<RouteRow> rows;
  bool all_pass = true;

  void write_text(std::ostream& os) const;
};

/// PDE tolerance against a closed form: 1e-2 (1 + |reference|).
double pde_tolerance(double reference);
/// Monte Carlo tolerance: 3 standard errors plus a fixed Euler-bias allowance.
double mc_tolerance(double std_error);
inline constexpr double kEulerBiasAllowance = 5e-3;

TriangulationReport triangulation_report(const pde::PdeProblem& problem, const pde::SpatialGrid& grid,
                                         const TriangulationConfig& config);

}  // namespace gcir::analysis
