#pragma once

// Price-signal generation through the deterministic flexibility function.
//
// Per-hour objective, with residual r = Y_t - D_ref_t:
//   J(r) + weight_v * J(H(Y_t) - v_ref_t) + weight_u * J(U_t - U_ref_t)
// where the last two terms are present only when an ancillary map is given
// and J is the selected cost kind. Sequential generation minimizes it hour by
// hour; simultaneous generation minimizes the sum jointly over all hours.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flexprice/execution.hpp"
#include "flexprice/ff_core.hpp"

namespace flexprice::price {

enum class CostKind { absolute, quadratic };
enum class OptMode { sequential, simultaneous };

std::string_view to_string(CostKind kind);
std::string_view to_string(OptMode mode);
/// Throws ValidationError on unknown names.
CostKind parse_cost_kind(std::string_view name);
OptMode parse_opt_mode(std::string_view name);

/// J(residual).
double cost(double residual, CostKind kind);
/// Subgradient of J; zero at the kink of the absolute cost.
double cost_slope(double residual, CostKind kind);

/// J(demand - demand_ref). Rejects non-finite input.
double tracking_cost(double demand, double demand_ref, CostKind kind);

/// Grid-support terms: a demand-to-voltage map plus a price-deviation cost.
struct AncillaryMap {
  double v0 = 1.0;      // no-load voltage, p.u.
  double droop = 0.05;  // p.u. voltage per demand unit
  /// One value (applied to every hour) or one per hour.
  std::vector<double> v_ref{1.0};
  double weight_v = 1.0;
  double weight_u = 1.0;
  /// Nominal price per hour; empty means the FF reference price everywhere.
  std::vector<double> u_ref;

  void validate(std::size_t horizon) const;
  double v_ref_at(std::size_t t) const { return v_ref.size() == 1 ? v_ref[0] : v_ref[t]; }
};

/// Linear feeder drop: v = v0 - droop * demand.
double voltage_of_demand(double demand, const AncillaryMap& anc);

struct OptConfig {
  double u_min = 0.0;
  double u_max = 1.0;
  double tol = 1e-10;
  /// Per-hour golden-section cap (sequential) or per-start direct-search
  /// iteration cap (simultaneous).
  std::size_t max_iters = 200000;
  std::size_t n_starts = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Everything that defines one price-generation instance.
struct PriceProblem {
  ff::FlexState x0;
  std::vector<double> baseline;
  std::vector<double> demand_ref;
  ff::FlexParams params;
  CostKind cost_kind = CostKind::quadratic;
  std::optional<AncillaryMap> ancillary;

  std::size_t horizon() const { return baseline.size(); }
  void validate() const;

  /// Nominal price for hour t: the ancillary u_ref when given, else ref_price.
  double nominal_price(std::size_t t) const;
  /// Objective contribution of hour t given the price and resulting demand.
  double hour_objective(std::size_t t, double price, double demand) const;
  /// Sum of hour objectives along the deterministic rollout of `prices`.
  double total_objective(std::span<const double> prices) const;
  /// Adjoint gradient of total_objective. Exact wherever the objective is
  /// differentiable (no clamping, no demand floor, no kink active).
  std::vector<double> gradient(std::span<const double> prices) const;
};

struct PriceSolution {
  std::vector<double> prices;
  std::vector<double> demand;
  double objective = 0.0;
  std::vector<double> residuals;  // |D_t - D_ref_t|
  std::size_t iterations = 0;
  std::size_t clamp_events = 0;
  OptMode mode = OptMode::sequential;
  bool ancillary_used = false;
  /// Simultaneous only: index of the start that produced the solution.
  std::size_t best_start = 0;
};

PriceSolution sequential_optimize(const PriceProblem& problem, const OptConfig& cfg);

/// Multi-start bounded direct search over the whole price vector. Start 0 is
/// the sequential solution, start 1 the constant nominal signal, the rest are
/// seeded uniform draws. The result never scores worse than start 0.
PriceSolution simultaneous_optimize(const PriceProblem& problem, const OptConfig& cfg,
                                    Execution exec = Execution::parallel);

PriceSolution optimize(const PriceProblem& problem, const OptConfig& cfg, OptMode mode,
                       Execution exec = Execution::parallel);

struct Metrics {
  double sse = 0.0;
  double sum_penalty = 0.0;
};

Metrics metrics(const PriceSolution& sol, std::span<const double> demand_ref);

}  // namespace flexprice::price
