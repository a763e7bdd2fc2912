#include "flexprice/price_opt.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "flexprice/direct_search.hpp"
#include "flexprice/errors.hpp"

namespace flexprice::price {

std::string_view to_string(CostKind kind) {
  return kind == CostKind::absolute ? "absolute" : "quadratic";
}

std::string_view to_string(OptMode mode) {
  return mode == OptMode::sequential ? "sequential" : "simultaneous";
}

CostKind parse_cost_kind(std::string_view name) {
  if (name == "absolute") return CostKind::absolute;
  if (name == "quadratic") return CostKind::quadratic;
  throw ValidationError("unknown cost kind '" + std::string(name) +
                        "' (expected absolute|quadratic)");
}

OptMode parse_opt_mode(std::string_view name) {
  if (name == "sequential") return OptMode::sequential;
  if (name == "simultaneous") return OptMode::simultaneous;
  throw ValidationError("unknown optimization mode '" + std::string(name) +
                        "' (expected sequential|simultaneous)");
}

double cost(double residual, CostKind kind) {
  return kind == CostKind::absolute ? std::abs(residual) : residual * residual;
}

double cost_slope(double residual, CostKind kind) {
  if (kind == CostKind::quadratic) return 2.0 * residual;
  return residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0);
}

double tracking_cost(double demand, double demand_ref, CostKind kind) {
  if (!std::isfinite(demand) || !std::isfinite(demand_ref))
    throw ValidationError("tracking_cost: non-finite input");
  return cost(demand - demand_ref, kind);
}

void AncillaryMap::validate(std::size_t horizon) const {
  if (!(v0 > 0.0)) throw ValidationError("ancillary.v0 must be > 0");
  if (!(droop >= 0.0)) throw ValidationError("ancillary.droop must be >= 0");
  if (!(weight_v >= 0.0)) throw ValidationError("ancillary.weight_v must be >= 0");
  if (!(weight_u >= 0.0)) throw ValidationError("ancillary.weight_u must be >= 0");
  if (v_ref.size() != 1 && v_ref.size() != horizon)
    throw ValidationError("ancillary.v_ref must have 1 or " + std::to_string(horizon) +
                          " samples, got " + std::to_string(v_ref.size()));
  if (!u_ref.empty() && u_ref.size() != horizon)
    throw ValidationError("ancillary.u_ref must have " + std::to_string(horizon) +
                          " samples, got " + std::to_string(u_ref.size()));
  for (double u : u_ref)
    if (!(u >= 0.0 && u <= 1.0)) throw ValidationError("ancillary.u_ref outside [0,1]");
}

double voltage_of_demand(double demand, const AncillaryMap& anc) {
  return anc.v0 - anc.droop * demand;
}

void OptConfig::validate() const {
  if (!(u_min >= 0.0 && u_min < u_max && u_max <= 1.0))
    throw ValidationError("opt bounds must satisfy 0 <= u_min < u_max <= 1");
  if (!(tol > 0.0)) throw ValidationError("opt.tol must be > 0");
  if (max_iters < 1) throw ValidationError("opt.max_iters must be >= 1");
  if (n_starts < 1) throw ValidationError("opt.n_starts must be >= 1");
}

void PriceProblem::validate() const {
  params.validate();
  if (baseline.empty()) throw ValidationError("price problem: empty horizon");
  if (demand_ref.size() != baseline.size())
    throw ValidationError("price problem: demand_ref has " +
                          std::to_string(demand_ref.size()) + " samples but baseline has " +
                          std::to_string(baseline.size()));
  if (!(x0.x >= 0.0 && x0.x <= 1.0)) throw ValidationError("price problem: x0 outside [0,1]");
  ff::Series{0, baseline, ff::SeriesLabel::baseline}.validate();
  ff::Series{0, demand_ref, ff::SeriesLabel::demand_ref}.validate();
  if (ancillary) ancillary->validate(horizon());
}

double PriceProblem::nominal_price(std::size_t t) const {
  if (ancillary && !ancillary->u_ref.empty()) return ancillary->u_ref[t];
  return params.ref_price;
}

double PriceProblem::hour_objective(std::size_t t, double price, double demand) const {
  double value = cost(demand - demand_ref[t], cost_kind);
  if (ancillary) {
    value += ancillary->weight_v *
             cost(voltage_of_demand(demand, *ancillary) - ancillary->v_ref_at(t), cost_kind);
    value += ancillary->weight_u * cost(price - nominal_price(t), cost_kind);
  }
  return value;
}

double PriceProblem::total_objective(std::span<const double> prices) const {
  ff::FlexState state = x0;
  double total = 0.0;
  for (std::size_t t = 0; t < prices.size(); ++t) {
    const auto r = ff::step_deterministic(state, prices[t], baseline[t], params);
    total += hour_objective(t, prices[t], r.demand);
    state = r.state;
  }
  return total;
}

std::vector<double> PriceProblem::gradient(std::span<const double> prices) const {
  const std::size_t n = prices.size();
  const double k = params.sensitivity;
  const double gain = params.dt_hours / params.capacity;

  // Forward pass: record local partials of each step.
  struct Local {
    double dy_du, dy_dx, dcost_dy, dcost_du;
    bool state_passes;  // false when the state update was clamped
  };
  std::vector<Local> local(n);
  ff::FlexState state = x0;
  for (std::size_t t = 0; t < n; ++t) {
    const double u = prices[t];
    const double dev = params.ref_price - u;
    const bool charging = dev >= 0.0;
    const double headroom = charging ? 1.0 - state.x : state.x;
    const auto r = ff::step_deterministic(state, u, baseline[t], params);
    const bool floored = baseline[t] + k * dev * headroom < 0.0;

    Local& l = local[t];
    l.dy_du = floored ? 0.0 : -k * headroom;
    l.dy_dx = floored ? 0.0 : (charging ? -k * dev : k * dev);
    l.dcost_dy = cost_slope(r.demand - demand_ref[t], cost_kind);
    l.dcost_du = 0.0;
    if (ancillary) {
      const double v = voltage_of_demand(r.demand, *ancillary);
      l.dcost_dy -= ancillary->droop * ancillary->weight_v *
                    cost_slope(v - ancillary->v_ref_at(t), cost_kind);
      l.dcost_du = ancillary->weight_u * cost_slope(u - nominal_price(t), cost_kind);
    }
    l.state_passes = !r.clamped;
    state = r.state;
  }

  // Reverse pass. adjoint = dF/dx_{t+1}.
  std::vector<double> grad(n);
  double adjoint = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const Local& l = local[t];
    const double through_state = l.state_passes ? adjoint : 0.0;
    const double dF_dy = l.dcost_dy + through_state * gain;
    grad[t] = dF_dy * l.dy_du + l.dcost_du;
    adjoint = dF_dy * l.dy_dx + through_state;
  }
  return grad;
}

namespace {

struct Candidate {
  double price;
  double value;
};

// Grid, then golden-section on the best bracket, then tie-break toward nominal.
Candidate minimize_hour(const std::function<double(double)>& phi, double u_min,
                        double u_max, double nominal, const OptConfig& cfg,
                        std::size_t& iterations) {
  constexpr int kGridIntervals = 1000;
  const double h = (u_max - u_min) / kGridIntervals;
  auto grid_point = [&](int i) { return i == kGridIntervals ? u_max : u_min + i * h; };

  std::vector<Candidate> candidates;
  Candidate grid_best{u_min, phi(u_min)};
  for (int i = 1; i <= kGridIntervals; ++i) {
    const double u = grid_point(i);
    const double v = phi(u);
    if (v < grid_best.value) grid_best = {u, v};
  }
  candidates.push_back(grid_best);

  const int best_i = static_cast<int>(std::lround((grid_best.price - u_min) / h));
  const double lo = grid_point(std::max(0, best_i - 1));
  const double hi = grid_point(std::min(kGridIntervals, best_i + 1));
  const auto golden = opt::golden_section(phi, lo, hi, cfg.tol, cfg.max_iters);
  iterations += golden.iterations;
  candidates.push_back({golden.x, golden.value});

  const double nominal_in_box = std::clamp(nominal, u_min, u_max);
  candidates.push_back({nominal_in_box, phi(nominal_in_box)});

  double best_value = candidates.front().value;
  for (const auto& c : candidates) best_value = std::min(best_value, c.value);
  const Candidate* chosen = nullptr;
  for (const auto& c : candidates) {
    if (c.value > best_value + cfg.tol) continue;
    if (!chosen || std::abs(c.price - nominal) < std::abs(chosen->price - nominal)) chosen = &c;
  }
  return *chosen;
}

PriceSolution finish(const PriceProblem& problem, std::vector<double> prices, OptMode mode,
                     std::size_t iterations) {
  PriceSolution sol;
  const auto roll = ff::rollout(problem.x0, prices, problem.baseline, problem.params);
  sol.objective = problem.total_objective(prices);
  sol.prices = std::move(prices);
  sol.demand = roll.demand;
  sol.residuals.resize(sol.demand.size());
  for (std::size_t t = 0; t < sol.demand.size(); ++t)
    sol.residuals[t] = std::abs(sol.demand[t] - problem.demand_ref[t]);
  sol.iterations = iterations;
  sol.clamp_events = roll.clamp_events;
  sol.mode = mode;
  sol.ancillary_used = problem.ancillary.has_value();
  return sol;
}

}  // namespace

PriceSolution sequential_optimize(const PriceProblem& problem, const OptConfig& cfg) {
  problem.validate();
  cfg.validate();

  const std::size_t n = problem.horizon();
  std::vector<double> prices(n);
  std::size_t iterations = 0;
  ff::FlexState state = problem.x0;
  for (std::size_t t = 0; t < n; ++t) {
    const double b = problem.baseline[t];
    auto phi = [&](double u) {
      const auto r = ff::step_deterministic(state, u, b, problem.params);
      return problem.hour_objective(t, u, r.demand);
    };
    const Candidate c =
        minimize_hour(phi, cfg.u_min, cfg.u_max, problem.nominal_price(t), cfg, iterations);
    prices[t] = c.price;
    state = ff::step_deterministic(state, c.price, b, problem.params).state;
  }
  return finish(problem, std::move(prices), OptMode::sequential, iterations);
}

namespace {

struct LocalResult {
  std::vector<double> prices;
  double value = 0.0;
  std::size_t iterations = 0;
};

constexpr std::size_t kWindow = 8;
constexpr std::size_t kStride = 4;
constexpr std::size_t kMaxSweeps = 200;

// Cost of hours [from, n) starting at `state`, with prices[from..] taken from
// `prices` except the window [from, from + w) taken from `window`.
double suffix_cost(const PriceProblem& problem, ff::FlexState state,
                   std::span<const double> prices, std::size_t from,
                   std::span<const double> window) {
  double total = 0.0;
  for (std::size_t t = from; t < prices.size(); ++t) {
    const double u = t - from < window.size() ? window[t - from] : prices[t];
    const auto r = ff::step_deterministic(state, u, problem.baseline[t], problem.params);
    total += problem.hour_objective(t, u, r.demand);
    state = r.state;
  }
  return total;
}

// Overlapping-window sweeps of bounded Nelder-Mead. Short horizons get a
// single full-dimensional search. A window move is kept only when the full
// objective does not increase.
LocalResult local_search(const PriceProblem& problem, std::vector<double> start,
                         const OptConfig& cfg) {
  const std::size_t n = start.size();
  LocalResult out;
  out.prices = std::move(start);
  out.value = problem.total_objective(out.prices);

  opt::NelderMeadOptions nm;
  nm.f_tol = cfg.tol * 1e-2;
  nm.x_tol = cfg.tol;

  if (n <= kWindow) {
    const std::vector<double> lo(n, cfg.u_min), hi(n, cfg.u_max);
    nm.max_iters = cfg.max_iters;
    auto f = [&](std::span<const double> u) { return problem.total_objective(u); };
    auto r = opt::nelder_mead_box(f, out.prices, lo, hi, nm);
    out.iterations = r.iterations;
    const double value = problem.total_objective(r.x);
    if (value <= out.value) {
      out.prices = std::move(r.x);
      out.value = value;
    }
    return out;
  }

  const std::vector<double> lo(kWindow, cfg.u_min), hi(kWindow, cfg.u_max);
  std::vector<double> states(n + 1);
  for (std::size_t sweep = 0; sweep < kMaxSweeps && out.iterations < cfg.max_iters; ++sweep) {
    const double sweep_start = out.value;
    for (std::size_t from = 0; from < n && out.iterations < cfg.max_iters; from += kStride) {
      const std::size_t w = std::min(kWindow, n - from);
      ff::FlexState state = problem.x0;
      for (std::size_t t = 0; t < from; ++t)
        state = ff::step_deterministic(state, out.prices[t], problem.baseline[t], problem.params)
                    .state;

      auto f = [&](std::span<const double> window) {
        return suffix_cost(problem, state, out.prices, from, window);
      };
      nm.max_iters = cfg.max_iters - out.iterations;
      std::vector<double> window(out.prices.begin() + from, out.prices.begin() + from + w);
      auto r = opt::nelder_mead_box(f, window, std::span(lo).first(w), std::span(hi).first(w),
                                    nm);
      out.iterations += r.iterations;

      std::vector<double> trial = out.prices;
      std::copy(r.x.begin(), r.x.end(), trial.begin() + from);
      const double value = problem.total_objective(trial);
      if (value <= out.value) {
        out.prices = std::move(trial);
        out.value = value;
      }
      if (from + w >= n) break;
    }
    if (!(sweep_start - out.value > cfg.tol)) break;
  }
  return out;
}

}  // namespace

PriceSolution simultaneous_optimize(const PriceProblem& problem, const OptConfig& cfg,
                                    Execution exec) {
  problem.validate();
  cfg.validate();

  const std::size_t n = problem.horizon();
  std::vector<std::vector<double>> starts;
  starts.reserve(cfg.n_starts);
  starts.push_back(sequential_optimize(problem, cfg).prices);
  if (cfg.n_starts > 1) {
    std::vector<double> nominal(n);
    for (std::size_t t = 0; t < n; ++t)
      nominal[t] = std::clamp(problem.nominal_price(t), cfg.u_min, cfg.u_max);
    starts.push_back(std::move(nominal));
  }
  ff::NoiseSource draws(cfg.seed);
  while (starts.size() < cfg.n_starts) {
    std::vector<double> u(n);
    for (double& v : u) v = cfg.u_min + (cfg.u_max - cfg.u_min) * draws.uniform();
    starts.push_back(std::move(u));
  }

  std::vector<LocalResult> results(starts.size());
  const auto count = static_cast<std::ptrdiff_t>(starts.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) results[i] = local_search(problem, starts[i], cfg);
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i) results[i] = local_search(problem, starts[i], cfg);
  }

  std::size_t best = 0;
  std::size_t iterations = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    iterations += results[i].iterations;
    if (results[i].value < results[best].value) best = i;
  }
  auto sol = finish(problem, std::move(results[best].prices), OptMode::simultaneous, iterations);
  sol.best_start = best;
  return sol;
}

PriceSolution optimize(const PriceProblem& problem, const OptConfig& cfg, OptMode mode,
                       Execution exec) {
  return mode == OptMode::sequential ? sequential_optimize(problem, cfg)
                                     : simultaneous_optimize(problem, cfg, exec);
}

Metrics metrics(const PriceSolution& sol, std::span<const double> demand_ref) {
  if (demand_ref.size() != sol.demand.size())
    throw ValidationError("metrics: demand_ref length differs from solution");
  Metrics m;
  for (std::size_t t = 0; t < sol.demand.size(); ++t) {
    const double r = sol.demand[t] - demand_ref[t];
    m.sse += r * r;
    m.sum_penalty += sol.prices[t];
  }
  return m;
}

}  // namespace flexprice::price
