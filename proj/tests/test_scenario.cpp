#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "flexprice/csv.hpp"
#include "flexprice/errors.hpp"
#include "flexprice/scenario.hpp"

using namespace flexprice;
using namespace flexprice::scenario;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("flexprice_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json minimal() {
  return json::parse(R"({
    "flex_params": {"capacity": 10, "sensitivity": 2, "ref_price": 0.5},
    "horizon_hours": 24,
    "profiles": {"baseline": 1.0, "demand_ref": 1.2},
    "opt": {"mode": "sequential", "cost": "absolute"}
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string validation_message(const json& doc) {
  try {
    parse_config(doc, fs::temp_directory_path());
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config resolves with documented defaults") {
  const auto cfg = parse_config(minimal(), "/tmp");
  CHECK(cfg.x0 == 0.5);
  CHECK(cfg.flex.noise_sigma == 0.0);
  CHECK(cfg.flex.dt_hours == 1.0);
  CHECK(cfg.opt.config.u_min == 0.0);
  CHECK(cfg.opt.config.u_max == 1.0);
  CHECK(cfg.opt.config.tol == 1e-10);
  CHECK(cfg.opt.config.n_starts == 4);
  CHECK_FALSE(cfg.ancillary);
  CHECK_FALSE(cfg.mpc);
  CHECK(cfg.output_dir == fs::path("/tmp/out"));
  const json echo = to_json(cfg);
  CHECK(echo["opt"]["tol"] == 1e-10);
  CHECK(echo["profiles"]["baseline"]["kind"] == "constant");
}

TEST_CASE("profile length mismatch names the field") {
  json doc = minimal();
  doc["profiles"]["baseline"] = std::vector<double>(23, 1.0);
  const std::string msg = validation_message(doc);
  CHECK(msg.find("profiles.baseline") != std::string::npos);
  CHECK(msg.find("23") != std::string::npos);
  CHECK(msg.find("24") != std::string::npos);
}

TEST_CASE("sinusoid peaks at phase + 6") {
  ProfileSpec s;
  s.kind = ProfileSpec::Kind::sinusoid;
  s.mean = 1.0;
  s.amplitude = 0.5;
  s.phase_hours = 0.0;
  const auto v = generate(s, 24, 0, "x");
  CHECK(v[6] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(*std::max_element(v.begin(), v.end()) == v[6]);
  CHECK(v[0] == doctest::Approx(1.0));
  // absolute hours: starting at hour 5 shifts the samples
  CHECK(generate(s, 2, 5, "x")[1] == v[6]);
}

TEST_CASE("invalid configs are rejected with the field name") {
  json doc = minimal();
  doc["flex_params"]["capacty"] = 3;
  CHECK(validation_message(doc).find("flex_params.capacty") != std::string::npos);

  doc = minimal();
  doc["flex_params"]["capacity"] = -1;
  CHECK(validation_message(doc).find("capacity") != std::string::npos);

  doc = minimal();
  doc["opt"]["mode"] = "both";
  CHECK(validation_message(doc).find("both") != std::string::npos);

  doc = minimal();
  doc["simulate"] = {{"mode", "stochastic"}};
  CHECK(validation_message(doc).find("simulate.seed") != std::string::npos);

  doc = minimal();
  doc["profiles"]["demand_ref"] = {{"kind", "csv"}, {"path", "missing.csv"}};
  CHECK(validation_message(doc).find("file not found") != std::string::npos);

  doc = minimal();
  doc["profiles"]["baseline"] = -1.0;
  CHECK(validation_message(doc).find("baseline") != std::string::npos);

  doc = minimal();
  doc["mpc"] = {{"ambient", 10}, {"load", 1}, {"sim_hours", 12}};
  CHECK(validation_message(doc).find("horizon_hours") != std::string::npos);
}

TEST_CASE("json syntax errors carry line and column") {
  const fs::path dir = scratch_dir("syntax");
  std::ofstream(dir / "bad.json") << "{\n  \"horizon_hours\": 24,\n  oops\n}\n";
  try {
    load_config(dir / "bad.json");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bad.json:3:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config(dir / "absent.json"), IoError);
}

TEST_CASE("csv profiles are read relative to the config") {
  const fs::path dir = scratch_dir("csvprofile");
  {
    std::ofstream out(dir / "ref.csv");
    out << "hour,value\n";
    for (int h = 0; h < 24; ++h) out << h << ',' << 1.0 + 0.01 * h << '\n';
  }
  json doc = minimal();
  doc["profiles"]["demand_ref"] = {{"kind", "csv"}, {"path", "ref.csv"}};
  std::ofstream(dir / "s.json") << doc.dump();
  const auto cfg = load_config(dir / "s.json");
  const auto v = generate(cfg.demand_ref, 24, 0, "d");
  CHECK(v[23] == doctest::Approx(1.23));
  CHECK(cfg.demand_ref.path.is_absolute());
}

TEST_CASE("overrides replace config values") {
  auto cfg = parse_config(minimal(), "/tmp");
  Overrides o;
  o.seed = 77;
  o.mode = price::OptMode::simultaneous;
  o.cost = price::CostKind::quadratic;
  o.output_dir = "/tmp/elsewhere";
  apply_overrides(cfg, o);
  CHECK(cfg.opt.config.seed == 77);
  CHECK(cfg.opt.seed_given);
  CHECK(cfg.opt.mode == price::OptMode::simultaneous);
  CHECK(cfg.opt.cost == price::CostKind::quadratic);
  CHECK(cfg.output_dir == fs::path("/tmp/elsewhere"));
}

TEST_CASE("random starts require a seed") {
  json doc = minimal();
  doc["horizon_hours"] = 4;
  auto cfg = parse_config(doc, scratch_dir("seedless"));
  CHECK_NOTHROW(run_optimize(cfg));
  CHECK_THROWS_AS(run_compare(cfg), ValidationError);
  cfg.opt.config.n_starts = 2;
  CHECK_NOTHROW(run_compare(cfg));
}

TEST_CASE("compare with demand_ref equal to baseline tracks perfectly") {
  json doc = minimal();
  doc["horizon_hours"] = 12;
  doc["profiles"]["baseline"] = {{"kind", "sinusoid"}, {"mean", 1.0}, {"amplitude", 0.3}};
  doc["profiles"]["demand_ref"] = doc["profiles"]["baseline"];
  doc["opt"]["seed"] = 1;
  const auto cfg = parse_config(doc, scratch_dir("perfect"));
  const auto report = run_compare(cfg);
  REQUIRE(report.rows.size() == 4);
  for (const auto& r : report.rows) {
    CHECK_FALSE(r.error);
    CHECK(r.sse <= 1e-9);
  }
}

TEST_CASE("metrics recompute from emitted csv files and the echo reproduces outputs") {
  json doc = minimal();
  doc["horizon_hours"] = 10;
  doc["profiles"]["demand_ref"] = {{"kind", "sinusoid"}, {"mean", 1.0}, {"amplitude", 0.6}, {"phase_hours", 3}};
  doc["ancillary"] = {{"v_ref", 0.96}, {"weight_v", 2.0}};
  doc["opt"]["seed"] = 9;
  const fs::path dir = scratch_dir("roundtrip");
  const auto cfg = parse_config(doc, dir);
  const auto report = run_compare(cfg);

  const auto metrics = csv::read(cfg.output_dir / "metrics.csv");
  const auto manifest = csv::read(cfg.output_dir / "manifest.csv");
  CHECK(manifest.rows.size() == 5);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    const fs::path run = cfg.output_dir / manifest.rows[i][0];
    const auto table = csv::read(run);
    CHECK(table.header.back() == "voltage");
    const auto price = table.numbers("price");
    const auto pred = table.numbers("demand_pred");
    const auto ref = table.numbers("demand_ref");
    double sse = 0.0, pen = 0.0;
    for (std::size_t t = 0; t < price.size(); ++t) {
      sse += (pred[t] - ref[t]) * (pred[t] - ref[t]);
      pen += price[t];
    }
    CHECK(std::abs(sse - row.sse) <= 1e-9);
    CHECK(std::abs(pen - row.sum_penalty) <= 1e-9);
    CHECK(std::abs(metrics.numbers("sse")[i] - row.sse) <= 1e-9);
    CHECK(std::abs(metrics.numbers("sum_penalty")[i] - row.sum_penalty) <= 1e-9);
  }

  auto echoed = load_config(cfg.output_dir / "resolved.json");
  const fs::path dir2 = scratch_dir("roundtrip_echo");
  echoed.output_dir = dir2;
  run_compare(echoed);
  for (const char* f : {"metrics.csv", "sequential_absolute/price.csv", "simultaneous_quadratic/price.csv"})
    CHECK(slurp(cfg.output_dir / f) == slurp(dir2 / f));
}

TEST_CASE("simulate writes ff and ensemble csv deterministically") {
  json doc = minimal();
  doc["flex_params"]["noise_sigma"] = 0.05;
  doc["profiles"]["price"] = {{"kind", "sinusoid"}, {"mean", 0.5}, {"amplitude", 0.3}};
  doc["simulate"] = {{"mode", "stochastic"}, {"seed", 4}, {"paths", 16}};
  auto cfg = parse_config(doc, scratch_dir("sim_a"));
  const auto a = run_simulate(cfg);
  CHECK(a.files.size() == 2);
  const fs::path first = cfg.output_dir;
  cfg.output_dir = scratch_dir("sim_b");
  run_simulate(cfg);
  CHECK(slurp(first / "ff.csv") == slurp(cfg.output_dir / "ff.csv"));
  CHECK(slurp(first / "ensemble.csv") == slurp(cfg.output_dir / "ensemble.csv"));
  const auto states = csv::read(first / "ff.csv").numbers("state");
  for (double x : states) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("run_mpc: lossless idle tank uses no power") {
  json doc = minimal();
  doc["horizon_hours"] = 36;
  doc["mpc"] = {{"tank", {{"ua_top", 0}, {"ua_bot", 0}, {"k_mix", 0}}},
                {"controller", {{"horizon", 12}, {"terminal_weight", 0}}},
                {"initial_state", {{"t_top", 60}, {"t_bot", 60}}},
                {"sim_hours", 24},
                {"ambient", 20},
                {"load", 0},
                {"penalty", {{"kind", "sinusoid"}, {"mean", 0.5}, {"amplitude", 0.2}}}};
  const auto cfg = parse_config(doc, scratch_dir("mpc_idle"));
  const auto report = run_mpc(cfg);
  double total = 0.0;
  for (const auto& r : report.loop.rows) total += r.power;
  CHECK(total <= 1e-9);
  const auto table = csv::read(cfg.output_dir / "mpc.csv");
  CHECK(table.header == std::vector<std::string>{"hour", "t_top", "t_bot", "power", "ambient", "load", "penalty"});
  CHECK(table.rows.size() == 24);
}
