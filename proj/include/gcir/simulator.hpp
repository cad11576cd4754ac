#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "gcir/core.hpp"
#include "gcir/pde_solver.hpp"

// Euler polygonal approximation of the G-CIR dynamics under a single prior,
// and Monte Carlo estimates of upper and lower expectations obtained by
// maximizing over a family of volatility controls.
//
// A prior is identified with a control theta_t in [sigma_lo, sigma_hi]:
// d<B>_t = theta_t^2 dt and dB_t = theta_t dW_t.

namespace gcir::sim {

/// q*(t, x) sampled from a PDE solve, used as a state-feedback control.
struct ControlField {
  pde::SpatialGrid grid;
  std::vector<double> times;               // ascending
  std::vector<std::vector<double>> q;      // variance per level and node

  static ControlField from_solution(const pde::PdeSolution& sol);
  /// Same variance everywhere.
  static ControlField uniform(const pde::SpatialGrid& grid, double t_prime, double q);

  /// Variance at the stored level nearest to t and the node nearest to x
  /// (states off the grid are clamped to the boundary node).
  double variance_at(double t, double x) const;
};

class VolatilityControl {
 public:
  struct Constant {
    double theta;
  };
  struct PiecewiseConstant {
    std::vector<double> breakpoints;  // ascending
    std::vector<double> thetas;       // breakpoints.size() + 1 values
  };
  struct BangBang {
    std::shared_ptr<const ControlField> field;
  };

  static VolatilityControl constant(double theta) { return VolatilityControl(Constant{theta}); }
  static VolatilityControl piecewise(std::vector<double> breakpoints, std::vector<double> thetas);
  static VolatilityControl bang_bang(std::shared_ptr<const ControlField> field);

  /// Every theta the control can produce lies in [sigma_lo, sigma_hi].
  void validate(const GFunction& gf) const;

  /// theta at time t (left endpoint of the current step) and state x.
  double theta(double t, double x) const;

  bool is_state_dependent() const { return std::holds_alternative<BangBang>(kind_); }
  const auto& kind() const { return kind_; }

 private:
  using Kind = std::variant<Constant, PiecewiseConstant, BangBang>;
  explicit VolatilityControl(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// How the diffusion coefficient is extended below zero.
enum class Projection {
  /// sigma~(x) = sigma sqrt(x) for x >= 0 and 0 otherwise; drift untouched.
  ZeroBelow,
  /// full truncation: drift and diffusion both evaluated at max(x, 0).
  FullTruncation,
};

struct EulerConfig {
  std::uint64_t n_steps = 1024;
  std::uint64_t n_paths = 10000;
  std::uint64_t seed = 1;
  Projection projection = Projection::ZeroBelow;

  void validate() const;
};

/// The model and the window [t, t_prime] started from x0.
struct McProblem {
  CirParams params;
  GFunction gf;
  double t = 0.0;
  double t_prime = 1.0;
  double x0 = 1.0;

  void validate() const;
};

struct StepParts {
  double drift;      // (d1 - b1 x) h + (d2 - b2 x) theta^2 h
  double diffusion;  // sigma~(x) theta sqrt(h) z
};

/// The two increments of one Euler step from x with control theta, mesh h
/// and normal z.
inline StepParts euler_increments(const CirParams& p, Projection proj, double x, double theta,
                                  double h, double sqrt_h, double z) {
  const double xd = proj == Projection::FullTruncation && x < 0.0 ? 0.0 : x;
  const double drift = (p.delta1 - p.beta1 * xd) + (p.delta2 - p.beta2 * xd) * theta * theta;
  const double diff = x >= 0.0 ? p.sigma * std::sqrt(x) : 0.0;
  return {drift * h, diff * theta * sqrt_h * z};
}

inline double euler_step(const CirParams& p, Projection proj, double x, double theta, double h,
                         double sqrt_h, double z) {
  const StepParts s = euler_increments(p, proj, x, theta, h, sqrt_h, z);
  return x + s.drift + s.diffusion;
}

struct StepRecord {
  std::uint64_t k;
  double t;
  double x;
  double theta;
  double diffusion_increment;
};

struct PathResult {
  double terminal;
  double running_min;
};

/// One path. The k-th normal comes from the counter-based stream at
/// (seed, path_index, k), so paths are reproducible in isolation. The
/// optional observer sees every step (tests use it to check the projection
/// and the control band).
PathResult euler_path(const McProblem& prob, const VolatilityControl& control,
                      const EulerConfig& config, std::uint64_t path_index,
                      const std::function<void(const StepRecord&)>& observer = {});

struct PathEnsemble {
  EulerConfig config;
  VolatilityControl control;
  std::vector<double> terminal_values;
  std::vector<double> min_values;
};

PathEnsemble simulate(const McProblem& prob, const VolatilityControl& control,
                      const EulerConfig& config);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_paths = 0;
};

/// Mean and standard error (sample std / sqrt(n)) with a fixed summation order.
McEstimate summarize(std::span<const double> samples);

McEstimate mc_expectation(const Payoff& phi, const McProblem& prob,
                          const VolatilityControl& control, const EulerConfig& config);

struct UpperResult {
  McEstimate estimate;
  std::optional<double> theta_star;
};

/// Max over constant controls on an n_theta grid spanning [sigma_lo, sigma_hi].
/// Every theta reuses the same normals.
UpperResult upper_expectation_constant(const Payoff& phi, const McProblem& prob,
                                       const EulerConfig& config, std::size_t n_theta);

/// theta_k = sqrt(q*(t_k, X_k)) from a PDE-derived control field.
McEstimate upper_expectation_bangbang(const Payoff& phi, const McProblem& prob,
                                      const EulerConfig& config, const ControlField& field);

struct ConstantSearch {
  std::size_t n_theta = 5;
};
/// The field must come from the solve of the negated payoff.
struct FieldControl {
  std::shared_ptr<const ControlField> field;
};
using UpperEstimator = std::variant<ConstantSearch, FieldControl>;

/// -E[-phi] with the chosen upper estimator; the standard error is unchanged.
UpperResult lower_expectation(const Payoff& phi, const McProblem& prob, const EulerConfig& config,
                              const UpperEstimator& estimator);

void write_ensemble_csv(const PathEnsemble& ens, std::ostream& os);

}  // namespace gcir::sim
