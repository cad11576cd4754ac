#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gcir {

/// Raised when inputs violate a documented precondition or invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces a non-finite value or otherwise
/// cannot complete.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The sublinear generator G(a) = 1/2 (hi * a^+ - lo * a^-) with variance
/// band [lo, hi].
///
/// The ordinary constructor requires lo < hi. A single-prior band
/// (lo == hi) is available through single_prior() for the degenerate
/// checks that collapse the PDE to a linear one.
class GFunction {
 public:
  GFunction(double sigma_lo_sq, double sigma_hi_sq);

  static GFunction single_prior(double sigma_sq);

  double sigma_lo_sq() const { return lo_; }
  double sigma_hi_sq() const { return hi_; }
  double sigma_lo() const;
  double sigma_hi() const;
  bool degenerate() const { return lo_ == hi_; }

  /// G(a).
  double operator()(double a) const;

  /// The q in [lo, hi] attaining 2G(a) = q * a. Ties (a == 0) go to hi.
  double argmax(double a) const { return a < 0.0 ? lo_ : hi_; }

 private:
  struct Unchecked {};
  GFunction(double lo, double hi, Unchecked) : lo_(lo), hi_(hi) {}

  double lo_;
  double hi_;
};

inline double g_eval(const GFunction& gf, double a) { return gf(a); }
inline double g_argmax(const GFunction& gf, double a) { return gf.argmax(a); }

/// Which coefficients of the model are active.
///
/// DriftOnly has no d<B> drift (delta2 = beta2 = 0) and QvOnly has no dt
/// drift (delta1 = beta1 = 0). Inactive fields must be exactly zero; the
/// closed-form moments exist only in these two regimes.
enum class Regime { Full, DriftOnly, QvOnly };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

/// Coefficients of dX = (d1 - b1 X) dt + (d2 - b2 X) d<B> + sigma sqrt(X) dB.
///
/// sigma is also the Hoelder constant of x -> sigma sqrt(x).
struct CirParams {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double sigma = 0.0;
  Regime regime = Regime::Full;

  /// Active fields strictly positive, inactive fields zero, sigma >= 0.
  void validate() const;

  static CirParams full(double d1, double d2, double b1, double b2, double s);
  static CirParams drift_only(double d1, double b1, double s);
  static CirParams qv_only(double d2, double b2, double s);

  bool operator==(const CirParams&) const = default;
};

/// The alternative sign convention dX = (2 bt1 X + d1) dt + (2 bt2 X + d2) d<B> + ...
/// with negative bt's.
struct GeneralFormCoeffs {
  double beta1_tilde = 0.0;
  double beta2_tilde = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;

  bool operator==(const GeneralFormCoeffs&) const = default;
};

GeneralFormCoeffs to_general_form(const CirParams& p);

/// Inverse of to_general_form. sigma and the regime tag are not carried by
/// the general form and must be supplied.
CirParams from_general_form(const GeneralFormCoeffs& g, double sigma,
                            Regime regime = Regime::Full);

/// Terminal functional phi of X_{t'}.
///
/// Any payoff can be sign-flipped with negated(); lower expectations are
/// computed as -E[-phi].
class Payoff {
 public:
  enum class Kind { Identity, Square, SmoothedIndicator, ClippedLinear, Custom };

  static Payoff identity();
  static Payoff negate();
  static Payoff square();
  static Payoff neg_square();
  /// Linear ramp from 1 at x <= a down to 0 at x >= a + w.
  static Payoff smoothed_indicator(double a, double w = 0.05);
  static Payoff clipped_linear(double lo, double hi);
  static Payoff constant(double c) { return clipped_linear(c, c); }
  /// Piecewise-linear through (xs[i], ys[i]); flat outside the table.
  static Payoff custom(std::vector<double> xs, std::vector<double> ys);

  Kind kind() const { return kind_; }
  bool is_negated() const { return negated_; }
  Payoff negated() const;

  /// phi(x) for x >= 0; negative x is rejected.
  double operator()(double x) const;

  /// The same formula extended to the whole real line. Euler iterates may
  /// leave [0, inf) and the simulator evaluates them here.
  double eval_extended(double x) const;

  /// Lipschitz constant on [0, x_cap]. Only Square depends on the cap.
  double lipschitz_bound(double x_cap) const;

  /// sup |phi| on [0, x_cap].
  double sup_abs(double x_cap) const;

  double param_a() const { return a_; }
  double param_w() const { return w_; }
  const std::vector<double>& table_x() const { return xs_; }
  const std::vector<double>& table_y() const { return ys_; }

 private:
  Payoff(Kind k, double a, double w) : kind_(k), a_(a), w_(w) {}

  double raw(double x) const;

  Kind kind_;
  double a_ = 0.0;  // ramp start or clip low
  double w_ = 0.0;  // ramp width or clip high
  std::vector<double> xs_;
  std::vector<double> ys_;
  bool negated_ = false;
};

inline double payoff_eval(const Payoff& phi, double x) { return phi(x); }

}  // namespace gcir
