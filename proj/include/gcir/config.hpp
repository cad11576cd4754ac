#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcir/core.hpp"
#include "gcir/simulator.hpp"

// Run configuration: one JSON document with a fixed schema (see
// docs/config.md). Unknown keys are rejected so that a typo in a numeric
// experiment cannot silently fall back to a default.

namespace gcir::config {

/// Validation failure with the offending field path, e.g. "params.beta1".
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : ValidationError(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct PayoffSpec {
  std::string kind = "identity";  // identity|negate|square|neg_square|smoothed_indicator|clipped_linear|constant|custom
  double a = 0.0;                 // smoothed_indicator
  double w = 0.05;                // smoothed_indicator
  double lo = 0.0;                // clipped_linear
  double hi = 1.0;                // clipped_linear
  double c = 0.0;                 // constant
  std::vector<double> x, y;       // custom

  Payoff build() const;
};

struct GridSpec {
  std::optional<double> x_max;  // default: pde::default_x_max
  std::size_t nx = 501;
};

struct ControlSpec {
  std::string kind = "search";  // constant|piecewise|search|bangbang
  double theta = 0.0;
  std::vector<double> breakpoints, thetas;
  std::size_t n_theta = 5;
};

struct StudySpec {
  std::vector<std::uint64_t> meshes = {16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  std::vector<std::uint64_t> strong_meshes = {16, 32, 64, 128, 256, 4096};
  std::size_t n_theta = 2;
  double gamma = 0.5;
};

struct RunConfig {
  CirParams params;
  double sigma_lo_sq = 1.0;
  double sigma_hi_sq = 2.0;
  PayoffSpec payoff;
  double t = 0.0;
  double t_prime = 1.0;
  double x0 = 1.0;
  GridSpec grid;
  sim::EulerConfig euler;
  ControlSpec control;
  StudySpec study;
  std::string output_dir = ".";

  GFunction gfunction() const;
  /// Runs every component validation; throws ConfigError naming the field.
  void validate() const;
};

RunConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

/// Parses and validates a config file. Parse errors carry line and column.
RunConfig load(const std::string& path);

/// FNV-1a of the canonical (sorted-key, compact) serialization, without the
/// output section.
std::string config_hash(const RunConfig& c);

}  // namespace gcir::config
