#include "gcir/core.hpp"

#include <algorithm>
#include <cmath>

namespace gcir {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

GFunction::GFunction(double sigma_lo_sq, double sigma_hi_sq)
    : lo_(sigma_lo_sq), hi_(sigma_hi_sq) {
  require(finite_nonneg(lo_), "GFunction: sigma_lo_sq must be finite and >= 0");
  require(std::isfinite(hi_) && hi_ > 0.0, "GFunction: sigma_hi_sq must be finite and > 0");
  require(lo_ < hi_, "GFunction: sigma_lo_sq must be strictly below sigma_hi_sq");
}

GFunction GFunction::single_prior(double sigma_sq) {
  require(std::isfinite(sigma_sq) && sigma_sq > 0.0,
          "GFunction::single_prior: variance must be finite and > 0");
  return GFunction(sigma_sq, sigma_sq, Unchecked{});
}

double GFunction::sigma_lo() const { return std::sqrt(lo_); }
double GFunction::sigma_hi() const { return std::sqrt(hi_); }

// 1/2 (hi a^+ - lo a^-) == 1/2 q*(a) a on both branches.
double GFunction::operator()(double a) const { return 0.5 * (argmax(a) * a); }

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Full: return "full";
    case Regime::DriftOnly: return "drift_only";
    case Regime::QvOnly: return "qv_only";
  }
  return "full";
}

Regime regime_from_string(const std::string& s) {
  if (s == "full") return Regime::Full;
  if (s == "drift_only") return Regime::DriftOnly;
  if (s == "qv_only") return Regime::QvOnly;
  throw ValidationError("unknown regime '" + s + "' (expected full, drift_only or qv_only)");
}

void CirParams::validate() const {
  require(finite_nonneg(sigma), "CirParams: sigma must be finite and >= 0");
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  const bool dt_active = regime != Regime::QvOnly;
  const bool qv_active = regime != Regime::DriftOnly;
  if (dt_active) {
    require(positive(delta1), "CirParams: delta1 must be > 0");
    require(positive(beta1), "CirParams: beta1 must be > 0");
  } else {
    require(delta1 == 0.0 && beta1 == 0.0,
            "CirParams: qv_only regime requires delta1 = beta1 = 0");
  }
  if (qv_active) {
    require(positive(delta2), "CirParams: delta2 must be > 0");
    require(positive(beta2), "CirParams: beta2 must be > 0");
  } else {
    require(delta2 == 0.0 && beta2 == 0.0,
            "CirParams: drift_only regime requires delta2 = beta2 = 0");
  }
}

CirParams CirParams::full(double d1, double d2, double b1, double b2, double s) {
  CirParams p{d1, d2, b1, b2, s, Regime::Full};
  p.validate();
  return p;
}

CirParams CirParams::drift_only(double d1, double b1, double s) {
  CirParams p{d1, 0.0, b1, 0.0, s, Regime::DriftOnly};
  p.validate();
  return p;
}

CirParams CirParams::qv_only(double d2, double b2, double s) {
  CirParams p{0.0, d2, 0.0, b2, s, Regime::QvOnly};
  p.validate();
  return p;
}

GeneralFormCoeffs to_general_form(const CirParams& p) {
  return {-p.beta1 / 2.0, -p.beta2 / 2.0, p.delta1, p.delta2};
}

CirParams from_general_form(const GeneralFormCoeffs& g, double sigma, Regime regime) {
  // Division and multiplication by 2 are exact, so the round trip is too.
  CirParams p{g.delta1, g.delta2, -2.0 * g.beta1_tilde, -2.0 * g.beta2_tilde, sigma, regime};
  p.validate();
  return p;
}

Payoff Payoff::identity() { return Payoff(Kind::Identity, 0.0, 0.0); }

Payoff Payoff::negate() { return identity().negated(); }

Payoff Payoff::square() { return Payoff(Kind::Square, 0.0, 0.0); }

Payoff Payoff::neg_square() { return square().negated(); }

Payoff Payoff::smoothed_indicator(double a, double w) {
  require(std::isfinite(a), "SmoothedIndicator: a must be finite");
  require(std::isfinite(w) && w > 0.0, "SmoothedIndicator: ramp width must be > 0");
  return Payoff(Kind::SmoothedIndicator, a, w);
}

Payoff Payoff::clipped_linear(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi,
          "ClippedLinear: need finite lo <= hi");
  return Payoff(Kind::ClippedLinear, lo, hi);
}

Payoff Payoff::custom(std::vector<double> xs, std::vector<double> ys) {
  require(!xs.empty() && xs.size() == ys.size(),
          "Custom payoff: need equally sized, non-empty tables");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(std::isfinite(xs[i]) && std::isfinite(ys[i]), "Custom payoff: non-finite entry");
    if (i > 0) require(xs[i] > xs[i - 1], "Custom payoff: abscissae must be strictly increasing");
  }
  Payoff p(Kind::Custom, 0.0, 0.0);
  p.xs_ = std::move(xs);
  p.ys_ = std::move(ys);
  return p;
}

Payoff Payoff::negated() const {
  Payoff p = *this;
  p.negated_ = !negated_;
  return p;
}

double Payoff::raw(double x) const {
  switch (kind_) {
    case Kind::Identity:
      return x;
    case Kind::Square:
      return x * x;
    case Kind::SmoothedIndicator:
      if (x <= a_) return 1.0;
      if (x >= a_ + w_) return 0.0;
      return 1.0 - (x - a_) / w_;
    case Kind::ClippedLinear:
      return std::clamp(x, a_, w_);
    case Kind::Custom: {
      if (x <= xs_.front()) return ys_.front();
      if (x >= xs_.back()) return ys_.back();
      auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      const std::size_t j = static_cast<std::size_t>(it - xs_.begin());
      const double s = (x - xs_[j - 1]) / (xs_[j] - xs_[j - 1]);
      return ys_[j - 1] + s * (ys_[j] - ys_[j - 1]);
    }
  }
  return 0.0;
}

double Payoff::eval_extended(double x) const {
  const double v = raw(x);
  return negated_ ? -v : v;
}

double Payoff::operator()(double x) const {
  if (!(x >= 0.0)) throw ValidationError("payoff evaluated at negative state");
  return eval_extended(x);
}

double Payoff::lipschitz_bound(double x_cap) const {
  switch (kind_) {
    case Kind::Identity:
      return 1.0;
    case Kind::Square:
      return 2.0 * std::max(x_cap, 0.0);
    case Kind::SmoothedIndicator:
      return 1.0 / w_;
    case Kind::ClippedLinear:
      return a_ == w_ ? 0.0 : 1.0;
    case Kind::Custom: {
      double l = 0.0;
      for (std::size_t i = 1; i < xs_.size(); ++i)
        l = std::max(l, std::abs(ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1]));
      return l;
    }
  }
  return 0.0;
}

double Payoff::sup_abs(double x_cap) const {
  switch (kind_) {
    case Kind::Identity:
      return x_cap;
    case Kind::Square:
      return x_cap * x_cap;
    case Kind::SmoothedIndicator:
      return 1.0;
    case Kind::ClippedLinear:
      return std::max(std::abs(std::clamp(0.0, a_, w_)), std::abs(std::clamp(x_cap, a_, w_)));
    case Kind::Custom: {
      double m = 0.0;
      for (double y : ys_) m = std::max(m, std::abs(y));
      return m;
    }
  }
  return 0.0;
}

}  // namespace gcir
