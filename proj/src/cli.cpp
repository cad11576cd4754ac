#include "gcir/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "gcir/analysis.hpp"
#include "gcir/closed_form.hpp"
#include "gcir/config.hpp"
#include "gcir/format.hpp"
#include "gcir/parallel.hpp"
#include "gcir/pde_solver.hpp"
#include "gcir/simulator.hpp"

namespace gcir::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

class Runner {
 public:
  Runner(config::RunConfig cfg, std::ostream& out) : cfg_(std::move(cfg)), out_(out), gf_(cfg_.gfunction()) {}

  int moments();
  int pde();
  int simulate();
  int upper();
  int lower();
  int converge();
  int markov_check();
  int compare();

 private:
  json meta() const {
    return {{"tool", kToolName},
            {"version", kVersion},
            {"config_hash", config::config_hash(cfg_)},
            {"seed", cfg_.euler.seed}};
  }

  pde::SpatialGrid grid() const {
    const double x_max = cfg_.grid.x_max.value_or(pde::default_x_max(cfg_.params, gf_, cfg_.x0));
    return pde::SpatialGrid(x_max, cfg_.grid.nx);
  }
  pde::PdeProblem problem(const Payoff& phi) const { return {cfg_.params, gf_, phi, cfg_.t_prime}; }
  sim::McProblem mc_problem() const { return {cfg_.params, gf_, cfg_.t, cfg_.t_prime, cfg_.x0}; }

  fs::path artifact(const std::string& name) const {
    fs::create_directories(cfg_.output_dir);
    return fs::path(cfg_.output_dir) / name;
  }

  // Writes the report next to any CSV artifacts and echoes it to stdout.
  void emit(const std::string& name, json body) const {
    body["meta"] = meta();
    const std::string text = body.dump(2) + "\n";
    std::ofstream(artifact(name + ".json"), std::ios::binary) << text;
    out_ << text;
  }

  std::shared_ptr<const sim::ControlField> field_for(const Payoff& phi) const {
    const auto sol = pde::solve(problem(phi), grid());
    return std::make_shared<const sim::ControlField>(sim::ControlField::from_solution(sol));
  }

  sim::VolatilityControl single_control(const Payoff& phi) const {
    const auto& c = cfg_.control;
    if (c.kind == "constant") return sim::VolatilityControl::constant(c.theta);
    if (c.kind == "piecewise") return sim::VolatilityControl::piecewise(c.breakpoints, c.thetas);
    if (c.kind == "bangbang") return sim::VolatilityControl::bang_bang(field_for(phi));
    throw config::ConfigError("control.kind", "this command needs a constant, piecewise or bangbang control");
  }

  static json estimate_json(const sim::McEstimate& e, std::optional<double> theta_star = std::nullopt) {
    json j = {{"value", e.value}, {"std_error", e.std_error}, {"n_paths", e.n_paths}};
    if (theta_star) j["theta_star"] = *theta_star;
    return j;
  }

  static json study_json(const analysis::RateStudy& s) {
    return {{"h", s.meshes}, {"error", s.errors}, {"fitted_slope", s.fitted_slope},
            {"fitted_intercept", s.fitted_intercept}};
  }

  config::RunConfig cfg_;
  std::ostream& out_;
  GFunction gf_;
};

int Runner::moments() {
  closed_form::MomentQuery q{cfg_.params, cfg_.t, cfg_.t_prime, cfg_.x0};
  json body = {{"regime", to_string(cfg_.params.regime)}, {"t", cfg_.t}, {"t_prime", cfg_.t_prime}, {"x", cfg_.x0}};
  if (cfg_.params.regime == Regime::DriftOnly) {
    body["mean"] = closed_form::mean_drift_case(q);
    body["second_moment_upper"] = closed_form::second_moment_drift_case(q, gf_.sigma_hi_sq());
    body["second_moment_lower"] = closed_form::second_moment_drift_case(q, gf_.sigma_lo_sq());
  } else if (cfg_.params.regime == Regime::QvOnly) {
    body["mean_upper"] = closed_form::mean_upper_qv_case(q, gf_);
    body["mean_lower"] = closed_form::mean_lower_qv_case(q, gf_);
  } else {
    throw config::ConfigError("regime", "closed-form moments need the drift_only or qv_only regime");
  }
  emit("moments", body);
  return 0;
}

int Runner::pde() {
  const auto g = grid();
  const auto sol = pde::solve(problem(cfg_.payoff.build()), g);
  {
    std::ofstream csv(artifact("pde.csv"), std::ios::binary);
    pde::write_csv(sol, csv);
  }
  emit("pde", {{"u", pde::evaluate(sol, cfg_.t, cfg_.x0)},
               {"t", cfg_.t},
               {"x", cfg_.x0},
               {"x_max", g.x_max()},
               {"nx", g.nx()},
               {"dt_used", sol.dt_used},
               {"steps", sol.steps},
               {"csv", "pde.csv"}});
  return 0;
}

int Runner::simulate() {
  const Payoff phi = cfg_.payoff.build();
  const auto control = single_control(phi);
  const auto ens = sim::simulate(mc_problem(), control, cfg_.euler);
  {
    std::ofstream csv(artifact("ensemble.csv"), std::ios::binary);
    sim::write_ensemble_csv(ens, csv);
  }
  std::vector<double> v(ens.terminal_values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = phi.eval_extended(ens.terminal_values[i]);
  json body = estimate_json(sim::summarize(v));
  body["csv"] = "ensemble.csv";
  emit("simulate", body);
  return 0;
}

int Runner::upper() {
  const Payoff phi = cfg_.payoff.build();
  json body;
  if (cfg_.control.kind == "search") {
    const auto r = sim::upper_expectation_constant(phi, mc_problem(), cfg_.euler, cfg_.control.n_theta);
    body = estimate_json(r.estimate, r.theta_star);
  } else {
    body = estimate_json(sim::mc_expectation(phi, mc_problem(), single_control(phi), cfg_.euler));
  }
  body["control"] = cfg_.control.kind;
  emit("upper", body);
  return 0;
}

int Runner::lower() {
  const Payoff phi = cfg_.payoff.build();
  json body;
  if (cfg_.control.kind == "search") {
    const auto r = sim::lower_expectation(phi, mc_problem(), cfg_.euler, sim::ConstantSearch{cfg_.control.n_theta});
    body = estimate_json(r.estimate, r.theta_star);
  } else if (cfg_.control.kind == "bangbang") {
    const auto r = sim::lower_expectation(phi, mc_problem(), cfg_.euler, sim::FieldControl{field_for(phi.negated())});
    body = estimate_json(r.estimate);
  } else {
    auto e = sim::mc_expectation(phi.negated(), mc_problem(), single_control(phi), cfg_.euler);
    e.value = -e.value;
    body = estimate_json(e);
  }
  body["control"] = cfg_.control.kind;
  emit("lower", body);
  return 0;
}

int Runner::converge() {
  const auto mp = mc_problem();
  const auto inc = analysis::increment_moment_study(mp, cfg_.euler, cfg_.study.meshes, cfg_.study.n_theta);
  const auto strong = analysis::strong_error_study(mp, cfg_.euler, cfg_.study.strong_meshes);
  const auto neg = analysis::negativity_diagnostic(mp, cfg_.euler, cfg_.study.meshes, cfg_.study.n_theta);
  const std::pair<const char*, const analysis::RateStudy*> csvs[] = {
      {"increment_moment.csv", &inc}, {"strong_error.csv", &strong}, {"negativity.csv", &neg.terminal_negative_part}};
  for (const auto& [name, study] : csvs) {
    std::ofstream csv(artifact(name), std::ios::binary);
    study->write_csv(csv);
  }
  json negj = study_json(neg.terminal_negative_part);
  negj["negative_fraction"] = neg.negative_fraction;
  negj["worst_theta"] = neg.worst_theta;
  emit("converge", {{"increment_moment", study_json(inc)},
                    {"strong_error", study_json(strong)},
                    {"negativity", negj},
                    {"csv", {"increment_moment.csv", "strong_error.csv", "negativity.csv"}}});
  return 0;
}

int Runner::markov_check() {
  const auto g = grid();
  const double d = analysis::markov_semigroup_check(problem(cfg_.payoff.build()), g, cfg_.study.gamma);
  emit("markov_check", {{"gamma", cfg_.study.gamma}, {"discrepancy", d}, {"x_max", g.x_max()}, {"nx", g.nx()}});
  return 0;
}

int Runner::compare() {
  analysis::TriangulationConfig tc;
  tc.x0 = cfg_.x0;
  tc.t = cfg_.t;
  tc.euler = cfg_.euler;
  tc.n_theta = cfg_.control.kind == "search" ? cfg_.control.n_theta : 5;
  const auto rep = analysis::triangulation_report(problem(cfg_.payoff.build()), grid(), tc);

  json rows = json::array();
  for (const auto& r : rep.rows) {
    json row = {{"route", r.route},         {"value", r.value},         {"std_error", r.std_error},
                {"discrepancy", r.discrepancy}, {"tolerance", r.tolerance}, {"pass", r.pass}};
    row["reference"] = r.reference ? json(*r.reference) : json(nullptr);
    rows.push_back(row);
  }
  json body = {{"rows", rows}, {"all_pass", rep.all_pass}};
  body["closed_form"] = rep.oracle ? json{{"upper", rep.oracle->upper}, {"lower", rep.oracle->lower}} : json(nullptr);
  body["meta"] = meta();
  std::ofstream(artifact("compare.json"), std::ios::binary) << body.dump(2) << "\n";
  rep.write_text(out_);
  return rep.all_pass ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sublinear expectations of the CIR process under volatility uncertainty", kToolName};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);

  double lo_sq = 0.0, hi_sq = 0.0, a = 0.0;
  bool show_argmax = false;
  auto* gfun = app.add_subcommand("gfun", "Evaluate G(a) for a variance band");
  gfun->add_option("--lo-sq", lo_sq, "lower variance bound")->required();
  gfun->add_option("--hi-sq", hi_sq, "upper variance bound")->required();
  gfun->add_option("--a", a, "argument")->required()->allow_extra_args(false);
  gfun->add_flag("--argmax", show_argmax, "print the maximizing variance instead");

  CommonFlags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"moments", "Closed-form moments (drift_only / qv_only regimes)"},
      {"pde", "Solve the nonlinear pricing PDE; writes pde.csv"},
      {"simulate", "Simulate Euler paths under one control; writes ensemble.csv"},
      {"upper", "Monte Carlo upper expectation"},
      {"lower", "Monte Carlo lower expectation"},
      {"converge", "Increment-moment, strong-error and negativity studies"},
      {"markov-check", "Two-stage vs one-shot PDE solve"},
      {"compare", "Closed form vs PDE vs Monte Carlo; nonzero exit on tolerance violation"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config_path, "JSON run configuration")->required();
    sub->add_option("--out-dir", flags.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", flags.seed, "random seed (overrides euler.seed)");
    sub->add_option("--threads", flags.threads, "worker threads; never changes results");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  parallel::workers_from_env();
  if (flags.threads) parallel::set_workers(*flags.threads);

  try {
    if (gfun->parsed()) {
      const GFunction gf = lo_sq == hi_sq ? GFunction::single_prior(hi_sq) : GFunction(lo_sq, hi_sq);
      out << fmt_shortest(show_argmax ? gf.argmax(a) : gf(a)) << "\n";
      return 0;
    }
    config::RunConfig cfg = config::load(flags.config_path);
    if (flags.seed) cfg.euler.seed = *flags.seed;
    if (flags.out_dir) cfg.output_dir = *flags.out_dir;
    Runner runner(std::move(cfg), out);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "moments") return runner.moments();
    if (cmd == "pde") return runner.pde();
    if (cmd == "simulate") return runner.simulate();
    if (cmd == "upper") return runner.upper();
    if (cmd == "lower") return runner.lower();
    if (cmd == "converge") return runner.converge();
    if (cmd == "markov-check") return runner.markov_check();
    if (cmd == "compare") return runner.compare();
    err << app.help();
    return 2;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gcir::cli
