#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hcc/errors.hpp"
#include "hcc/experiment.hpp"

using namespace hcc;
using nlohmann::json;

namespace {

json tiny_config_json() {
  return json::parse(R"({
    "schema": "hcc/1",
    "name": "tiny",
    "seed": 3,
    "game": {
      "payoff": {"kind": "bilinear", "p": 0.5, "q": 0.5},
      "bank_f": ["sigmoid"],
      "bank_g": ["sigmoid"]
    },
    "flow": {"kind": "gda", "dt": 0.001, "t_end": 1.0},
    "init": {"theta": [1.0], "phi": [-1.0]},
    "targets": [{"p": [0.5], "q": [0.5]}],
    "outputs": {"csv": "", "summary": "", "record_every": 10}
  })");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config round-trips through serialize/parse") {
  const ExperimentConfig cfg = parse_config(tiny_config_json());
  const json once = serialize_config(cfg);
  const json twice = serialize_config(parse_config(once));
  CHECK(once == twice);
  CHECK(cfg.name == "tiny");
  CHECK(cfg.seed == 3);
  CHECK(cfg.flow.dt == 0.001);
  CHECK(cfg.targets.size() == 1);
}

TEST_CASE("config errors carry the offending field path") {
  json j = tiny_config_json();
  j["flow"].erase("t_end");
  try {
    parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("$.flow.t_end") != std::string::npos);
  }

  json bad_schema = tiny_config_json();
  bad_schema["schema"] = "hcc/2";
  CHECK_THROWS_AS(parse_config(bad_schema), ConfigError);

  json bad_kind = tiny_config_json();
  bad_kind["game"]["payoff"]["kind"] = "quartic";
  try {
    parse_config(bad_kind);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("$.game.payoff.kind") != std::string::npos);
  }
}

TEST_CASE("HCC_SEED environment variable overrides the config seed") {
  const std::string path = "out/test_seed_cfg.json";
  std::filesystem::create_directories("out");
  std::ofstream(path) << tiny_config_json().dump();
  setenv("HCC_SEED", "42", 1);
  const ExperimentConfig cfg = load_config_file(path);
  unsetenv("HCC_SEED");
  CHECK(cfg.seed == 42);
  const ExperimentConfig plain = load_config_file(path);
  CHECK(plain.seed == 3);
}

TEST_CASE("run_experiment fills a schema-valid summary") {
  const ExperimentConfig cfg = parse_config(tiny_config_json());
  const RunResult res = run_experiment(cfg);
  validate_summary(res.summary);
  CHECK(res.summary.at("name") == "tiny");
  CHECK(res.summary.at("rows").get<std::size_t>() == res.trajectory.size());
  CHECK(res.trajectory.size() == 101);  // floor(1.0/0.001/10) + 1
  // hidden bilinear: H attached and constant
  CHECK(res.summary.at("constant_H").get<bool>());
}

TEST_CASE("run_and_write produces byte-identical outputs on re-run") {
  json j = tiny_config_json();
  j["outputs"]["csv"] = "out/test_det.csv";
  j["outputs"]["summary"] = "out/test_det.json";
  const ExperimentConfig cfg = parse_config(j);
  run_and_write(cfg);
  const std::string csv1 = slurp("out/test_det.csv");
  const std::string sum1 = slurp("out/test_det.json");
  run_and_write(cfg);
  CHECK(slurp("out/test_det.csv") == csv1);
  CHECK(slurp("out/test_det.json") == sum1);
  CHECK_FALSE(std::filesystem::exists("out/test_det.csv.tmp"));
  CHECK_FALSE(std::filesystem::exists("out/test_det.json.tmp"));
  CHECK(!csv1.empty());
  CHECK(json::parse(sum1).at("schema") == "hcc/1");
}

TEST_CASE("sweep expands the axis cross-product and is thread-invariant") {
  json j = tiny_config_json();
  j["game"]["regularize"] = {{"lambda", 0.5}, {"center_f", {0.5}}, {"center_g", {0.5}}};
  const ExperimentConfig base = parse_config(j);
  SweepAxes axes;
  axes.lambdas = {0.25, 0.5};
  axes.seeds = {1, 2, 3};
  axes.grid_k = 2;
  axes.grid_lo = -1.0;
  axes.grid_hi = 1.0;
  const auto rows1 = run_sweep(base, axes, 1);
  const auto rows4 = run_sweep(base, axes, 4);
  REQUIRE(rows1.size() == 2 * 3 * 4);  // lambda x seed x 2^2 grid
  REQUIRE(rows4.size() == rows1.size());
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].axis_desc == rows4[i].axis_desc);
    CHECK(rows1[i].verdict == rows4[i].verdict);
    CHECK(rows1[i].final_r == rows4[i].final_r);  // bitwise
    CHECK_FALSE(rows1[i].failed);
  }
}

TEST_CASE("sweep over lambda requires a regularize block") {
  const ExperimentConfig base = parse_config(tiny_config_json());
  SweepAxes axes;
  axes.lambdas = {0.1};
  CHECK_THROWS_AS(run_sweep(base, axes, 1), ConfigError);
}

TEST_CASE("summary validation rejects missing keys") {
  json bad{{"schema", "hcc/1"}, {"name", "x"}};
  CHECK_THROWS_AS(validate_summary(bad), ConfigError);
}

TEST_CASE("preset configs on disk parse cleanly") {
  for (const char* name :
       {"rps_recurrence", "rps_regularized", "fig3_vanilla_gan", "fig4_wgan_regularized",
        "fig4_wgan_cycle", "fig4_wgan_sgda", "fig4_wgan_sgda_cycle", "rate_sweep"}) {
    const std::string path = std::string(HCC_CONFIG_DIR) + "/" + name + ".json";
    CHECK_NOTHROW(load_config_file(path));
  }
}
