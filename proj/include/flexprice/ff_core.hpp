#pragma once

// Flexibility function: a scalar state-of-flexibility x in [0,1] driven by
// price deviations. The deterministic skeleton is used by the optimizers;
// the stochastic variant (Euler-Maruyama on the state) is for evaluation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "flexprice/execution.hpp"

namespace flexprice::ff {

struct FlexParams {
  /// Energy-state capacity in unit-demand-hours.
  double capacity = 10.0;
  /// Demand response per unit price deviation.
  double sensitivity = 2.0;
  /// Nominal price in normalized units.
  double ref_price = 0.5;
  /// Diffusion magnitude on the state, per sqrt(hour).
  double noise_sigma = 0.0;
  double dt_hours = 1.0;

  /// Throws ValidationError naming the first violated bound.
  void validate() const;
};

struct FlexState {
  double x = 0.5;
};

enum class SeriesLabel { price, baseline, demand_ref, demand_pred, voltage };

std::string_view to_string(SeriesLabel label);

/// Hourly samples starting at `start_hour`.
struct Series {
  int start_hour = 0;
  std::vector<double> values;
  SeriesLabel label = SeriesLabel::baseline;

  std::size_t size() const { return values.size(); }
  /// Prices must lie in [0,1]; demands must be non-negative; all finite.
  void validate() const;
};

/// Demand deviation caused by pricing at `price` while the state is `x`.
/// Charging (price below reference) saturates as x -> 1, discharging as x -> 0.
/// Throws std::domain_error when price or x leaves [0,1].
double delta_demand(double price, double x, const FlexParams& p);

struct StepResult {
  FlexState state;
  double demand = 0.0;
  /// The unclamped state left [0,1] and was projected back.
  bool clamped = false;
};

StepResult step_deterministic(FlexState state, double price, double baseline,
                              const FlexParams& p);

/// Standard-normal source with a fully specified output sequence:
/// std::mt19937_64 seeded with `seed`; each uniform is (bits >> 11) * 2^-53;
/// each normal uses two uniforms u1, u2 as sqrt(-2 ln(1 - u1)) * cos(2 pi u2).
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Euler-Maruyama step. Demand is computed from the pre-noise state. One
/// normal is drawn on every call, so streams stay aligned across sigma values.
StepResult step_stochastic(FlexState state, double price, double baseline,
                           const FlexParams& p, NoiseSource& noise);

enum class SimMode { deterministic, stochastic };

struct Rollout {
  std::vector<double> demand;  // N samples
  std::vector<double> states;  // N + 1 samples, states[0] = x0
  std::size_t clamp_events = 0;
};

/// Folds the step over all hours. Stochastic mode requires a seed.
/// Domain errors are rethrown with the offending hour index.
Rollout rollout(FlexState x0, std::span<const double> prices,
                std::span<const double> baseline, const FlexParams& p,
                SimMode mode = SimMode::deterministic,
                std::optional<std::uint64_t> seed = std::nullopt);

/// Monte Carlo ensemble of stochastic rollouts, one per seed. The parallel
/// path distributes paths over OpenMP threads; output order follows `seeds`.
std::vector<Rollout> rollout_ensemble(FlexState x0,
                                      std::span<const double> prices,
                                      std::span<const double> baseline,
                                      const FlexParams& p,
                                      std::span<const std::uint64_t> seeds,
                                      Execution exec = Execution::parallel);

}  // namespace flexprice::ff
