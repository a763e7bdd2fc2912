#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(FLEXPRICE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "flexprice_cli_test";
  fs::create_directories(dir);
  std::ofstream(dir / name) << body;
  return dir / name;
}

const char* kMinimal = R"({
  "flex_params": {"capacity": 10, "sensitivity": 2, "ref_price": 0.5},
  "horizon_hours": 6,
  "profiles": {"baseline": 1.0, "demand_ref": 1.2},
  "opt": {"seed": 3}
})";

}  // namespace

TEST_CASE("cli exit codes") {
  const auto ok = write_config("ok.json", kMinimal);
  const fs::path out = fs::temp_directory_path() / "flexprice_cli_test" / "out";
  CHECK(run("optimize-price --config " + ok.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "price.csv"));
  CHECK(fs::exists(out / "resolved.json"));
  CHECK(run("compare --config " + ok.string() + " --out " + out.string() + " --seed 4") == 0);
  CHECK(run("simulate-ff --config " + ok.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "ff.csv"));

  // validation: bad flag value, bad field, missing subcommand
  CHECK(run("optimize-price --config " + ok.string() + " --mode greedy") == 1);
  const auto bad = write_config("bad.json", R"({"flex_params": {"capacity": -1, "sensitivity": 2, "ref_price": 0.5},
    "horizon_hours": 6, "profiles": {"baseline": 1, "demand_ref": 1}})");
  CHECK(run("optimize-price --config " + bad.string()) == 1);
  CHECK(run("") == 1);
  CHECK(run("run-mpc --config " + ok.string() + " --out " + out.string()) == 1);

  // I/O: unreadable config, unwritable output directory
  CHECK(run("compare --config /nonexistent/cfg.json") == 3);
  CHECK(run("optimize-price --config " + ok.string() + " --out /proc/flexprice_denied") == 3);
}
