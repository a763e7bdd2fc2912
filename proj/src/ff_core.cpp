#include "flexprice/ff_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "flexprice/errors.hpp"

namespace flexprice::ff {

void FlexParams::validate() const {
  if (!(capacity > 0.0)) throw ValidationError("flex_params.capacity must be > 0");
  if (!(sensitivity >= 0.0)) throw ValidationError("flex_params.sensitivity must be >= 0");
  if (!(ref_price >= 0.0 && ref_price <= 1.0))
    throw ValidationError("flex_params.ref_price must lie in [0,1]");
  if (!(noise_sigma >= 0.0)) throw ValidationError("flex_params.noise_sigma must be >= 0");
  if (!(dt_hours > 0.0)) throw ValidationError("flex_params.dt_hours must be > 0");
  if (!std::isfinite(capacity) || !std::isfinite(sensitivity) ||
      !std::isfinite(noise_sigma) || !std::isfinite(dt_hours))
    throw ValidationError("flex_params must be finite");
}

std::string_view to_string(SeriesLabel label) {
  switch (label) {
    case SeriesLabel::price: return "price";
    case SeriesLabel::baseline: return "baseline";
    case SeriesLabel::demand_ref: return "demand_ref";
    case SeriesLabel::demand_pred: return "demand_pred";
    case SeriesLabel::voltage: return "voltage";
  }
  return "unknown";
}

void Series::validate() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const std::string where = std::string(to_string(label)) + "[" + std::to_string(i) + "]";
    if (!std::isfinite(v)) throw ValidationError(where + " is not finite");
    if (label == SeriesLabel::price && (v < 0.0 || v > 1.0))
      throw ValidationError(where + " outside [0,1]");
    if ((label == SeriesLabel::baseline || label == SeriesLabel::demand_ref ||
         label == SeriesLabel::demand_pred) &&
        v < 0.0)
      throw ValidationError(where + " is negative");
  }
}

double delta_demand(double price, double x, const FlexParams& p) {
  if (!(price >= 0.0 && price <= 1.0))
    throw std::domain_error("price " + std::to_string(price) + " outside [0,1]");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("flexibility state " + std::to_string(x) + " outside [0,1]");
  const double deviation = p.ref_price - price;
  const double headroom = deviation >= 0.0 ? 1.0 - x : x;
  return p.sensitivity * deviation * headroom;
}

namespace {

void check_baseline(double baseline) {
  if (!(baseline >= 0.0) || !std::isfinite(baseline))
    throw std::domain_error("baseline demand " + std::to_string(baseline) +
                            " must be finite and >= 0");
}

StepResult clamp_state(double unclamped, double demand) {
  StepResult out;
  out.demand = demand;
  out.clamped = unclamped < 0.0 || unclamped > 1.0;
  out.state.x = std::clamp(unclamped, 0.0, 1.0);
  return out;
}

}  // namespace

StepResult step_deterministic(FlexState state, double price, double baseline,
                              const FlexParams& p) {
  check_baseline(baseline);
  const double demand = std::max(0.0, baseline + delta_demand(price, state.x, p));
  return clamp_state(state.x + (demand - baseline) * p.dt_hours / p.capacity, demand);
}

double NoiseSource::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseSource::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

StepResult step_stochastic(FlexState state, double price, double baseline,
                           const FlexParams& p, NoiseSource& noise) {
  check_baseline(baseline);
  const double demand = std::max(0.0, baseline + delta_demand(price, state.x, p));
  const double xi = noise.normal();
  double next = state.x + (demand - baseline) * p.dt_hours / p.capacity;
  if (p.noise_sigma > 0.0) next += p.noise_sigma * std::sqrt(p.dt_hours) * xi;
  return clamp_state(next, demand);
}

Rollout rollout(FlexState x0, std::span<const double> prices,
                std::span<const double> baseline, const FlexParams& p,
                SimMode mode, std::optional<std::uint64_t> seed) {
  if (prices.size() != baseline.size())
    throw ValidationError("rollout: prices has " + std::to_string(prices.size()) +
                          " samples but baseline has " + std::to_string(baseline.size()));
  if (prices.empty()) throw ValidationError("rollout: empty horizon");
  if (mode == SimMode::stochastic && !seed)
    throw ValidationError("rollout: stochastic mode requires a seed");
  if (!(x0.x >= 0.0 && x0.x <= 1.0))
    throw std::domain_error("rollout: initial state outside [0,1]");

  const std::size_t n = prices.size();
  Rollout out;
  out.demand.resize(n);
  out.states.resize(n + 1);
  out.states[0] = x0.x;

  std::optional<NoiseSource> noise;
  if (mode == SimMode::stochastic) noise.emplace(*seed);

  FlexState state = x0;
  for (std::size_t t = 0; t < n; ++t) {
    StepResult r;
    try {
      r = mode == SimMode::deterministic
              ? step_deterministic(state, prices[t], baseline[t], p)
              : step_stochastic(state, prices[t], baseline[t], p, *noise);
    } catch (const std::domain_error& e) {
      throw std::domain_error("hour " + std::to_string(t) + ": " + e.what());
    }
    state = r.state;
    out.demand[t] = r.demand;
    out.states[t + 1] = r.state.x;
    if (r.clamped) ++out.clamp_events;
  }
  return out;
}

std::vector<Rollout> rollout_ensemble(FlexState x0, std::span<const double> prices,
                                      std::span<const double> baseline,
                                      const FlexParams& p,
                                      std::span<const std::uint64_t> seeds,
                                      Execution exec) {
  // Validate once up front so worker threads never throw.
  if (!seeds.empty()) (void)rollout(x0, prices, baseline, p, SimMode::deterministic);

  std::vector<Rollout> paths(seeds.size());
  const auto count = static_cast<std::ptrdiff_t>(seeds.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i)
      paths[i] = rollout(x0, prices, baseline, p, SimMode::stochastic, seeds[i]);
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i)
      paths[i] = rollout(x0, prices, baseline, p, SimMode::stochastic, seeds[i]);
  }
  return paths;
}

}  // namespace flexprice::ff
