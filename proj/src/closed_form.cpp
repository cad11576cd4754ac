#include "gcir/closed_form.hpp"

#include <cmath>

namespace gcir::closed_form {

namespace {

void require_regime(const MomentQuery& q, Regime want, const char* fn) {
  if (q.params.regime != want)
    throw ValidationError(std::string(fn) + ": requires the " + to_string(want) +
                          " regime flag on params (got " + to_string(q.params.regime) + ")");
  q.validate();
}

// 1 - exp(-r), accurate for small r.
double one_minus_exp_neg(double r) { return -std::expm1(-r); }

// k + (x - k) exp(-r), written so that r = 0 returns x bit-for-bit.
double relax_towards(double x, double k, double r) {
  return x - (x - k) * one_minus_exp_neg(r);
}

}  // namespace

void MomentQuery::validate() const {
  params.validate();
  if (!(std::isfinite(t) && t >= 0.0)) throw ValidationError("MomentQuery: t must be >= 0");
  if (!(std::isfinite(t_prime) && t_prime >= t))
    throw ValidationError("MomentQuery: t_prime must be >= t");
  if (!(std::isfinite(x) && x >= 0.0)) throw ValidationError("MomentQuery: x must be >= 0");
}

double mean_drift_case(const MomentQuery& q) {
  require_regime(q, Regime::DriftOnly, "mean_drift_case");
  const double k = q.params.delta1 / q.params.beta1;
  return relax_towards(q.x, k, q.params.beta1 * q.horizon());
}

double second_moment_drift_case(const MomentQuery& q, double a_sq) {
  require_regime(q, Regime::DriftOnly, "second_moment_drift_case");
  if (!(std::isfinite(a_sq) && a_sq >= 0.0))
    throw ValidationError("second_moment_drift_case: a_sq must be >= 0");
  const double b = q.params.beta1;
  const double k = q.params.delta1 / b;
  const double c = q.params.sigma * q.params.sigma * a_sq / b;
  const double y = q.x - k;
  const double m = one_minus_exp_neg(b * q.horizon());
  // With E = 1 - m the textbook form
  //   k^2 + k c / 2 + E (c + 2k) y + E^2 (y^2 + c/2 (k - 2x))
  // regroups to x^2 plus terms that all carry a factor m.
  return q.x * q.x - m * (c + 2.0 * k) * y + m * (m - 2.0) * (y * y - c * (0.5 * k + y));
}

double mean_upper_qv_case(const MomentQuery& q, const GFunction& gf) {
  require_regime(q, Regime::QvOnly, "mean_upper_qv_case");
  const double k = q.params.delta2 / q.params.beta2;
  const double var = q.x <= k ? gf.sigma_hi_sq() : gf.sigma_lo_sq();
  return relax_towards(q.x, k, var * q.params.beta2 * q.horizon());
}

double mean_lower_qv_case(const MomentQuery& q, const GFunction& gf) {
  require_regime(q, Regime::QvOnly, "mean_lower_qv_case");
  const double k = q.params.delta2 / q.params.beta2;
  const double var = q.x <= k ? gf.sigma_lo_sq() : gf.sigma_hi_sq();
  return relax_towards(q.x, k, var * q.params.beta2 * q.horizon());
}

}  // namespace gcir::closed_form
