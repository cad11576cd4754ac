#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcir/cli.hpp"
#include "gcir/config.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "gcir");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = gcir::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "gcir_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const json& j) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << j.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json small_full_model() {
  return json::parse(R"({
    "regime": "full",
    "params": {"delta1": 1, "delta2": 1, "beta1": 1, "beta2": 1, "sigma": 1},
    "gfunction": {"sigma_lo_sq": 1, "sigma_hi_sq": 2},
    "payoff": {"kind": "smoothed_indicator", "a": 1.0, "w": 0.2},
    "x0": 1.0,
    "grid": {"x_max": 9, "nx": 91},
    "euler": {"n_steps": 32, "n_paths": 500, "seed": 3},
    "control": {"kind": "search", "n_theta": 3},
    "study": {"meshes": [4, 8, 16], "strong_meshes": [4, 8, 32], "n_theta": 2, "gamma": 0.37}
  })");
}

}  // namespace

TEST_CASE("gfun") {
  const auto r = run({"gfun", "--lo-sq", "1", "--hi-sq", "4", "--a", "-2"});
  CHECK(r.code == 0);
  CHECK(r.out == "-1\n");
  CHECK(run({"gfun", "--lo-sq", "1", "--hi-sq", "4", "--a", "0", "--argmax"}).out == "4\n");
  CHECK(run({"gfun", "--lo-sq", "4", "--hi-sq", "1", "--a", "1"}).code == 2);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  const auto r = run({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({"moments"}).code == 2);
  CHECK(run({"moments", "--config", (scratch() / "missing.json").string()}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("config diagnostics name the field or the position") {
  json j = small_full_model();
  j["params"]["delta3"] = 1.0;
  auto r = run({"pde", "--config", write_config("unknown.json", j)});
  CHECK(r.code == 2);
  CHECK(r.err.find("params.delta3") != std::string::npos);

  j = small_full_model();
  j["params"]["beta1"] = -1.0;
  r = run({"pde", "--config", write_config("negative.json", j)});
  CHECK(r.code == 2);
  CHECK(r.err.find("params") != std::string::npos);

  const fs::path bad = scratch() / "broken.json";
  std::ofstream(bad) << "{\n  \"regime\": \"full\",\n  oops\n}";
  r = run({"pde", "--config", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);

  j = small_full_model();
  j["control"] = {{"kind", "constant"}, {"theta", 3.0}};
  CHECK(run({"simulate", "--config", write_config("theta.json", j)}).code == 2);
  j["control"] = {{"kind", "search"}};
  CHECK(run({"simulate", "--config", write_config("search.json", j)}).code == 2);
  CHECK(run({"moments", "--config", write_config("full.json", small_full_model())}).code == 2);
}

TEST_CASE("config round trip") {
  const auto c = gcir::config::load(std::string(GCIR_CONFIG_DIR) + "/full_model.json");
  const auto back = gcir::config::from_json(gcir::config::to_json(c));
  CHECK(gcir::config::to_json(back) == gcir::config::to_json(c));
  CHECK(gcir::config::config_hash(back) == gcir::config::config_hash(c));
  auto moved = c;
  moved.output_dir = "elsewhere";
  CHECK(gcir::config::config_hash(moved) == gcir::config::config_hash(c));
  auto reseeded = c;
  reseeded.euler.seed += 1;
  CHECK(gcir::config::config_hash(reseeded) != gcir::config::config_hash(c));
}

TEST_CASE("moments for the canonical drift-only config") {
  const auto out = scratch() / "moments";
  const auto r = run({"moments", "--config", std::string(GCIR_CONFIG_DIR) + "/drift_case.json", "--out-dir", out.string()});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["mean"].get<double>() == doctest::Approx(1.393469).epsilon(1e-6));
  CHECK(j["meta"]["tool"] == "gcir");
  CHECK(j["meta"].contains("config_hash"));
  CHECK(j["meta"]["seed"] == 20240917);
  CHECK(slurp(out / "moments.json") == r.out);
}

TEST_CASE("every subcommand runs and writes its artifacts") {
  const auto cfg = write_config("small.json", small_full_model());
  const auto out = scratch() / "all";
  for (const char* cmd : {"pde", "upper", "lower", "converge", "markov-check", "compare"}) {
    const auto r = run({cmd, "--config", cfg, "--out-dir", out.string()});
    CHECK_MESSAGE(r.code == 0, cmd, " ", r.err);
  }
  json j = small_full_model();
  j["control"] = {{"kind", "bangbang"}};
  const auto bb = write_config("bangbang.json", j);
  for (const char* cmd : {"simulate", "upper", "lower"}) CHECK(run({cmd, "--config", bb, "--out-dir", out.string()}).code == 0);
  j["control"] = {{"kind", "piecewise"}, {"breakpoints", {0.5}}, {"thetas", {1.0, 1.2}}};
  CHECK(run({"simulate", "--config", write_config("piecewise.json", j), "--out-dir", out.string()}).code == 0);

  for (const char* f : {"pde.csv", "pde.json", "ensemble.csv", "simulate.json", "upper.json", "lower.json",
                        "converge.json", "increment_moment.csv", "strong_error.csv", "negativity.csv",
                        "markov_check.json", "compare.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  CHECK(slurp(out / "pde.csv").rfind("t,x,u\n", 0) == 0);
  CHECK(slurp(out / "strong_error.csv").rfind("h,error\n", 0) == 0);
  CHECK(slurp(out / "ensemble.csv").rfind("path_index,terminal,running_min\n", 0) == 0);
  const auto conv = json::parse(slurp(out / "converge.json"));
  CHECK(conv["strong_error"]["error"].size() == 3);
  CHECK(conv["meta"]["seed"] == 3);
}

TEST_CASE("seed override and thread hint") {
  const auto cfg = write_config("small.json", small_full_model());
  const auto a = run({"upper", "--config", cfg, "--out-dir", (scratch() / "s1").string(), "--threads", "1"});
  const auto b = run({"upper", "--config", cfg, "--out-dir", (scratch() / "s2").string(), "--threads", "8"});
  CHECK(a.out == b.out);
  const auto c = run({"upper", "--config", cfg, "--out-dir", (scratch() / "s3").string(), "--seed", "77"});
  CHECK(json::parse(c.out)["meta"]["seed"] == 77);
  CHECK(json::parse(c.out)["value"] != json::parse(a.out)["value"]);
}

TEST_CASE("compare exits nonzero when an oracle check fails") {
  json j = small_full_model();
  j["regime"] = "drift_only";
  j["params"] = {{"delta1", 1.0}, {"delta2", 0.0}, {"beta1", 0.5}, {"beta2", 0.0}, {"sigma", 1.0}};
  j["payoff"] = {{"kind", "identity"}};
  j["grid"] = {{"x_max", 5.0}, {"nx", 101}};
  j["euler"] = {{"n_steps", 64}, {"n_paths", 4000}, {"seed", 5}};
  const auto ok = run({"compare", "--config", write_config("drift_ok.json", j), "--out-dir", (scratch() / "c1").string()});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("all checks passed") != std::string::npos);
  // Truncating the domain right above x0 drags the second moment down.
  j["params"]["beta1"] = 1.0;
  j["payoff"] = {{"kind", "square"}};
  j["grid"] = {{"x_max", 1.2}, {"nx", 61}};
  const auto bad = run({"compare", "--config", write_config("drift_bad.json", j), "--out-dir", (scratch() / "c2").string()});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("FAIL") != std::string::npos);
}
