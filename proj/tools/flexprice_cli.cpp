// flexprice: scenario runner.
//
//   flexprice simulate-ff    --config s.json [--out dir] [--seed n]
//   flexprice optimize-price --config s.json [--mode sequential|simultaneous] [--cost absolute|quadratic]
//   flexprice run-mpc        --config s.json
//   flexprice compare        --config s.json
//
// Exit codes: 0 ok, 1 validation, 2 solver failure, 3 I/O.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flexprice/errors.hpp"
#include "flexprice/scenario.hpp"

namespace fp = flexprice;
namespace sc = flexprice::scenario;

namespace {

enum Exit { kOk = 0, kValidation = 1, kSolver = 2, kIo = 3 };

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string cost;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "scenario JSON file")->required();
  cmd->add_option("--out", a.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", a.seed, "seed (overrides opt.seed and simulate.seed)");
  cmd->add_option("--mode", a.mode, "sequential | simultaneous (overrides opt.mode)");
  cmd->add_option("--cost", a.cost, "absolute | quadratic (overrides opt.cost)");
}

sc::ScenarioConfig resolve(const CommonArgs& a) {
  sc::ScenarioConfig cfg = sc::load_config(a.config);
  sc::Overrides o;
  o.seed = a.seed;
  if (!a.mode.empty()) o.mode = fp::price::parse_opt_mode(a.mode);
  if (!a.cost.empty()) o.cost = fp::price::parse_cost_kind(a.cost);
  if (!a.out.empty()) o.output_dir = a.out;
  sc::apply_overrides(cfg, o);
  return cfg;
}

void print_table(const sc::RunReport& r) {
  std::printf("%-13s %-10s %14s %14s %14s %11s %10s %6s\n", "mode", "cost", "sse", "sum_penalty",
              "objective", "wall_ms", "iters", "clamps");
  for (const auto& row : r.rows) {
    const std::string mode(fp::price::to_string(row.mode));
    const std::string cost(fp::price::to_string(row.cost));
    if (row.error) {
      std::printf("%-13s %-10s  FAILED: %s\n", mode.c_str(), cost.c_str(), row.error->c_str());
      continue;
    }
    std::printf("%-13s %-10s %14.6g %14.6g %14.6g %11.1f %10zu %6zu\n", mode.c_str(), cost.c_str(),
                row.sse, row.sum_penalty, row.objective, row.wall_time_ms, row.iterations,
                row.clamp_events);
  }
}

void print_files(const sc::ScenarioConfig& cfg, const std::vector<std::filesystem::path>& files) {
  std::cout << "wrote to " << cfg.output_dir.string() << ":";
  for (const auto& f : files) std::cout << ' ' << f.generic_string();
  std::cout << " resolved.json\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Price-signal generation through flexibility functions, and tank MPC"};
  app.require_subcommand(1);

  CommonArgs sim_args, opt_args, mpc_args, cmp_args;
  auto* sim = app.add_subcommand("simulate-ff", "roll the flexibility function over the price profile");
  auto* opt = app.add_subcommand("optimize-price", "optimize one price signal");
  auto* mpc = app.add_subcommand("run-mpc", "closed-loop tank MPC under the penalty signal");
  auto* cmp = app.add_subcommand("compare", "all mode x cost combinations");
  add_common(sim, sim_args);
  add_common(opt, opt_args);
  add_common(mpc, mpc_args);
  add_common(cmp, cmp_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (sim->parsed()) {
      const auto cfg = resolve(sim_args);
      const auto report = sc::run_simulate(cfg);
      print_files(cfg, report.files);
      return kOk;
    }
    if (opt->parsed()) {
      const auto cfg = resolve(opt_args);
      const auto report = sc::run_optimize(cfg);
      print_table(report);
      print_files(cfg, report.files);
      return kOk;
    }
    if (cmp->parsed()) {
      const auto cfg = resolve(cmp_args);
      const auto report = sc::run_compare(cfg);
      print_table(report);
      print_files(cfg, report.files);
      return report.ok() ? kOk : kSolver;
    }
    if (mpc->parsed()) {
      const auto cfg = resolve(mpc_args);
      const auto report = sc::run_mpc(cfg);
      std::printf("hours %zu  energy_cost %.6g  spearman(penalty, power) %.4f  max_kkt %.3g\n",
                  report.loop.rows.size(), report.loop.energy_cost, report.spearman_penalty_power,
                  report.loop.max_kkt);
      print_files(cfg, report.files);
      return kOk;
    }
  } catch (const fp::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const fp::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const fp::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  }
  return kOk;
}
