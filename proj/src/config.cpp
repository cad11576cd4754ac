#include "gcir/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gcir/format.hpp"

namespace gcir::config {

using nlohmann::json;

namespace {

// Reads the members of one JSON object and rejects anything it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double def) { return has(key) ? number(key) : (seen_.insert(key), def); }

  std::uint64_t count(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t count(const std::string& key, std::uint64_t def) {
    return has(key) ? count(key) : (seen_.insert(key), def);
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) {
    return has(key) ? string(key) : (seen_.insert(key), def);
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(field(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    return has(key) ? numbers(key) : (seen_.insert(key), def);
  }

  std::vector<std::uint64_t> counts(const std::string& key, std::vector<std::uint64_t> def) {
    seen_.insert(key);
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of integers");
    std::vector<std::uint64_t> out;
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) throw ConfigError(field(key), "expected an array of non-negative integers");
      out.push_back(e.get<std::uint64_t>());
    }
    return out;
  }

  ObjectReader object(const std::string& key) { return ObjectReader(at(key), field(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

sim::Projection projection_from(const std::string& s, const std::string& field) {
  if (s == "zero_below") return sim::Projection::ZeroBelow;
  if (s == "full_truncation") return sim::Projection::FullTruncation;
  throw ConfigError(field, "unknown projection '" + s + "' (expected zero_below or full_truncation)");
}

std::string projection_name(sim::Projection p) {
  return p == sim::Projection::ZeroBelow ? "zero_below" : "full_truncation";
}

PayoffSpec read_payoff(ObjectReader r) {
  PayoffSpec p;
  p.kind = r.string("kind");
  if (p.kind == "smoothed_indicator") {
    p.a = r.number("a");
    p.w = r.number("w", 0.05);
  } else if (p.kind == "clipped_linear") {
    p.lo = r.number("lo");
    p.hi = r.number("hi");
  } else if (p.kind == "constant") {
    p.c = r.number("c");
  } else if (p.kind == "custom") {
    p.x = r.numbers("x");
    p.y = r.numbers("y");
  } else if (p.kind != "identity" && p.kind != "negate" && p.kind != "square" && p.kind != "neg_square") {
    throw ConfigError(r.field("kind"), "unknown payoff kind '" + p.kind + "'");
  }
  r.finish();
  return p;
}

json payoff_json(const PayoffSpec& p) {
  json j = {{"kind", p.kind}};
  if (p.kind == "smoothed_indicator") {
    j["a"] = p.a;
    j["w"] = p.w;
  } else if (p.kind == "clipped_linear") {
    j["lo"] = p.lo;
    j["hi"] = p.hi;
  } else if (p.kind == "constant") {
    j["c"] = p.c;
  } else if (p.kind == "custom") {
    j["x"] = p.x;
    j["y"] = p.y;
  }
  return j;
}

ControlSpec read_control(ObjectReader r) {
  ControlSpec c;
  c.kind = r.string("kind");
  if (c.kind == "constant") {
    c.theta = r.number("theta");
  } else if (c.kind == "piecewise") {
    c.breakpoints = r.numbers("breakpoints");
    c.thetas = r.numbers("thetas");
  } else if (c.kind == "search") {
    c.n_theta = r.count("n_theta", 5);
  } else if (c.kind != "bangbang") {
    throw ConfigError(r.field("kind"), "unknown control kind '" + c.kind + "'");
  }
  r.finish();
  return c;
}

json control_json(const ControlSpec& c) {
  json j = {{"kind", c.kind}};
  if (c.kind == "constant") j["theta"] = c.theta;
  if (c.kind == "piecewise") {
    j["breakpoints"] = c.breakpoints;
    j["thetas"] = c.thetas;
  }
  if (c.kind == "search") j["n_theta"] = c.n_theta;
  return j;
}

// Re-throws component validation errors under the given field path.
template <class F>
void check(const std::string& field, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

Payoff PayoffSpec::build() const {
  if (kind == "identity") return Payoff::identity();
  if (kind == "negate") return Payoff::negate();
  if (kind == "square") return Payoff::square();
  if (kind == "neg_square") return Payoff::neg_square();
  if (kind == "smoothed_indicator") return Payoff::smoothed_indicator(a, w);
  if (kind == "clipped_linear") return Payoff::clipped_linear(lo, hi);
  if (kind == "constant") return Payoff::constant(c);
  if (kind == "custom") return Payoff::custom(x, y);
  throw ConfigError("payoff.kind", "unknown payoff kind '" + kind + "'");
}

GFunction RunConfig::gfunction() const {
  if (sigma_lo_sq == sigma_hi_sq) return GFunction::single_prior(sigma_hi_sq);
  return GFunction(sigma_lo_sq, sigma_hi_sq);
}

void RunConfig::validate() const {
  check("params", [&] { params.validate(); });
  check("gfunction", [&] { (void)gfunction(); });
  check("payoff", [&] { (void)payoff.build(); });
  if (!(t >= 0.0)) throw ConfigError("t", "must be >= 0");
  if (!(t_prime > t)) throw ConfigError("t_prime", "must be > t");
  if (!(x0 >= 0.0)) throw ConfigError("x0", "must be >= 0");
  if (grid.x_max && !(*grid.x_max > x0))
    throw ConfigError("grid.x_max", "must exceed x0");
  if (grid.nx < 16) throw ConfigError("grid.nx", "need at least 16 nodes");
  check("euler", [&] { euler.validate(); });
  const GFunction gf = gfunction();
  if (control.kind == "constant") {
    check("control.theta", [&] { sim::VolatilityControl::constant(control.theta).validate(gf); });
  } else if (control.kind == "piecewise") {
    check("control", [&] { sim::VolatilityControl::piecewise(control.breakpoints, control.thetas).validate(gf); });
  } else if (control.kind == "search") {
    if (!gf.degenerate() && control.n_theta < 2) throw ConfigError("control.n_theta", "must be >= 2");
  }
  if (study.n_theta < 2 && !gf.degenerate()) throw ConfigError("study.n_theta", "must be >= 2");
  if (!(study.gamma >= 0.0 && study.gamma <= t_prime)) throw ConfigError("study.gamma", "must lie in [0, t_prime]");
}

RunConfig from_json(const json& j) {
  ObjectReader root(j, "");
  RunConfig c;
  const Regime regime = [&] {
    const std::string s = root.string("regime");
    try {
      return regime_from_string(s);
    } catch (const ValidationError& e) {
      throw ConfigError("regime", e.what());
    }
  }();
  {
    auto p = root.object("params");
    c.params = {p.number("delta1", 0.0), p.number("delta2", 0.0), p.number("beta1", 0.0),
                p.number("beta2", 0.0), p.number("sigma"), regime};
    p.finish();
  }
  {
    auto g = root.object("gfunction");
    c.sigma_lo_sq = g.number("sigma_lo_sq");
    c.sigma_hi_sq = g.number("sigma_hi_sq");
    g.finish();
  }
  if (root.has("payoff")) c.payoff = read_payoff(root.object("payoff"));
  c.t = root.number("t", 0.0);
  c.t_prime = root.number("t_prime", 1.0);
  c.x0 = root.number("x0", 1.0);
  if (root.has("grid")) {
    auto g = root.object("grid");
    if (g.has("x_max")) c.grid.x_max = g.number("x_max");
    c.grid.nx = g.count("nx", 501);
    g.finish();
  }
  if (root.has("euler")) {
    auto e = root.object("euler");
    c.euler.n_steps = e.count("n_steps", 1024);
    c.euler.n_paths = e.count("n_paths", 10000);
    c.euler.seed = e.count("seed", 1);
    c.euler.projection = projection_from(e.string("projection", "zero_below"), e.field("projection"));
    e.finish();
  }
  if (root.has("control")) c.control = read_control(root.object("control"));
  if (root.has("study")) {
    auto s = root.object("study");
    c.study.meshes = s.counts("meshes", c.study.meshes);
    c.study.strong_meshes = s.counts("strong_meshes", c.study.strong_meshes);
    c.study.n_theta = s.count("n_theta", 2);
    c.study.gamma = s.number("gamma", 0.5);
    s.finish();
  }
  if (root.has("output")) {
    auto o = root.object("output");
    c.output_dir = o.string("dir", ".");
    o.finish();
  }
  root.finish();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["regime"] = to_string(c.params.regime);
  j["params"] = {{"delta1", c.params.delta1}, {"delta2", c.params.delta2}, {"beta1", c.params.beta1},
                 {"beta2", c.params.beta2},   {"sigma", c.params.sigma}};
  j["gfunction"] = {{"sigma_lo_sq", c.sigma_lo_sq}, {"sigma_hi_sq", c.sigma_hi_sq}};
  j["payoff"] = payoff_json(c.payoff);
  j["t"] = c.t;
  j["t_prime"] = c.t_prime;
  j["x0"] = c.x0;
  j["grid"] = {{"nx", c.grid.nx}};
  if (c.grid.x_max) j["grid"]["x_max"] = *c.grid.x_max;
  j["euler"] = {{"n_steps", c.euler.n_steps},
                {"n_paths", c.euler.n_paths},
                {"seed", c.euler.seed},
                {"projection", projection_name(c.euler.projection)}};
  j["control"] = control_json(c.control);
  j["study"] = {{"meshes", c.study.meshes},
                {"strong_meshes", c.study.strong_meshes},
                {"n_theta", c.study.n_theta},
                {"gamma", c.study.gamma}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON in '") + path + "': " + e.what());
  }
  return from_json(j);
}

std::string config_hash(const RunConfig& c) {
  // Where results go does not change what is computed.
  json j = to_json(c);
  j.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace gcir::config
