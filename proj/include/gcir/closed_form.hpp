#pragma once

#include "gcir/core.hpp"

// Exact first and second moments for the two parameter regimes where they
// are available in closed form. The regime is taken from params.regime and
// must be set explicitly by the caller; nothing is inferred from small
// parameter values.

namespace gcir::closed_form {

/// X^{t,x} observed at horizon t_prime. t == t_prime is allowed and yields the
/// terminal identity.
struct MomentQuery {
  CirParams params;
  double t = 0.0;
  double t_prime = 1.0;
  double x = 0.0;

  void validate() const;
  double horizon() const { return t_prime - t; }
};

/// E[X] = -E[-X] when delta2 = beta2 = 0 (no mean uncertainty).
double mean_drift_case(const MomentQuery& q);

/// Second moment for delta2 = beta2 = 0 under constant variance a_sq.
/// a_sq = sigma_hi^2 gives E[X^2], a_sq = sigma_lo^2 gives -E[-X^2].
double second_moment_drift_case(const MomentQuery& q, double a_sq);

/// E[X] when delta1 = beta1 = 0. Piecewise in x around delta2 / beta2.
double mean_upper_qv_case(const MomentQuery& q, const GFunction& gf);

/// -E[-X] when delta1 = beta1 = 0.
double mean_lower_qv_case(const MomentQuery& q, const GFunction& gf);

}  // namespace gcir::closed_form
