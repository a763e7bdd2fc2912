#pragma once

// Declarative scenarios: a JSON file describing the flexibility function,
// demand profiles, optimizer settings, optional ancillary terms and an
// optional storage-tank MPC study. Each run writes CSV files plus a
// resolved.json echo of the fully-defaulted configuration.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flexprice/ff_core.hpp"
#include "flexprice/mpc.hpp"
#include "flexprice/price_opt.hpp"

namespace flexprice::scenario {

/// A profile is a number (constant), an inline array, or an object with
/// "kind": constant | sinusoid | csv. Sinusoids evaluate
///   mean + amplitude * sin(2 pi (hour - phase_hours) / 24)
/// at absolute hour indices, so they peak at hour phase_hours + 6 (mod 24).
struct ProfileSpec {
  enum class Kind { inline_values, constant, sinusoid, csv };
  Kind kind = Kind::constant;
  std::vector<double> values;
  double value = 0.0;
  double mean = 0.0;
  double amplitude = 0.0;
  double phase_hours = 0.0;
  std::filesystem::path path;  // absolute once resolved
  std::string column = "value";
};

/// Produces exactly `length` samples for hours start_hour .. start_hour+length-1.
/// Inline and csv profiles must already have that length.
std::vector<double> generate(const ProfileSpec& spec, std::size_t length, int start_hour,
                             const std::string& name);

struct SimulateSection {
  ff::SimMode mode = ff::SimMode::deterministic;
  std::optional<std::uint64_t> seed;
  /// Ensemble size for stochastic runs; paths > 1 adds ensemble.csv.
  std::size_t paths = 1;
};

struct OptSection {
  price::OptMode mode = price::OptMode::sequential;
  price::CostKind cost = price::CostKind::absolute;
  price::OptConfig config;
  bool seed_given = false;
};

struct AncillarySection {
  double v0 = 1.0;
  double droop = 0.05;
  ProfileSpec v_ref;  // constant 1.0 unless given
  double weight_v = 1.0;
  double weight_u = 1.0;
  std::optional<ProfileSpec> u_ref;
};

struct MpcSection {
  mpc::TankModel tank;
  mpc::MpcConfig controller;
  mpc::TankState initial;
  std::size_t sim_hours = 120;
  ProfileSpec ambient;
  ProfileSpec load;
  /// When absent the penalty is the optimized price signal from the opt
  /// section, which then needs horizon_hours >= sim_hours + controller.horizon.
  std::optional<ProfileSpec> penalty;
};

struct ScenarioConfig {
  ff::FlexParams flex;
  double x0 = 0.5;
  int start_hour = 0;
  std::size_t horizon_hours = 24;
  ProfileSpec baseline;
  ProfileSpec demand_ref;
  /// Price signal for simulate-ff; defaults to the reference price.
  std::optional<ProfileSpec> price;
  OptSection opt;
  SimulateSection simulate;
  std::optional<AncillarySection> ancillary;
  std::optional<MpcSection> mpc;
  std::filesystem::path output_dir = "out";
};

/// Parses and validates. `base_dir` anchors relative csv and output paths.
/// Throws ValidationError naming the offending field.
ScenarioConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads a file; JSON syntax errors are reported with line and column.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Fully-defaulted echo. parse_config(to_json(c), any) reproduces c.
nlohmann::json to_json(const ScenarioConfig& cfg);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<price::OptMode> mode;
  std::optional<price::CostKind> cost;
  std::optional<std::filesystem::path> output_dir;
};

/// Applies CLI overrides and re-validates.
void apply_overrides(ScenarioConfig& cfg, const Overrides& overrides);

/// Builds the price-generation instance described by the scenario.
price::PriceProblem make_problem(const ScenarioConfig& cfg, price::CostKind cost);

struct MetricsRow {
  price::OptMode mode = price::OptMode::sequential;
  price::CostKind cost = price::CostKind::absolute;
  double sse = 0.0;
  double sum_penalty = 0.0;
  double objective = 0.0;
  double wall_time_ms = 0.0;  // reported on the console only
  std::size_t iterations = 0;
  std::size_t clamp_events = 0;
  std::optional<std::string> error;
};

struct RunReport {
  std::vector<MetricsRow> rows;
  std::vector<std::filesystem::path> files;  // relative to the output dir

  bool ok() const;
};

/// simulate-ff: rollout of the scenario price signal (ff.csv, optional ensemble.csv).
RunReport run_simulate(const ScenarioConfig& cfg);

/// optimize-price: one run with opt.mode and opt.cost (price.csv, metrics.csv).
RunReport run_optimize(const ScenarioConfig& cfg);

/// compare: all four mode x cost combinations on identical inputs. A failing
/// combination is recorded in its row; the others still run.
RunReport run_compare(const ScenarioConfig& cfg);

struct MpcReport {
  mpc::ClosedLoop loop;
  std::vector<double> penalty;
  double spearman_penalty_power = 0.0;
  std::vector<std::filesystem::path> files;
};

/// run-mpc: closed-loop tank control under the scenario penalty (mpc.csv,
/// mpc_summary.csv).
MpcReport run_mpc(const ScenarioConfig& cfg);

/// Writes resolved.json into the output dir.
void write_resolved(const ScenarioConfig& cfg);

}  // namespace flexprice::scenario
