#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "flexprice/errors.hpp"
#include "flexprice/price_opt.hpp"
#include "oracle.hpp"

using namespace flexprice;
using namespace flexprice::price;

namespace {

PriceProblem problem(double c, double k, double u0, double x0, std::vector<double> b,
                     std::vector<double> dref, CostKind kind) {
  PriceProblem p;
  p.params.capacity = c;
  p.params.sensitivity = k;
  p.params.ref_price = u0;
  p.x0.x = x0;
  p.baseline = std::move(b);
  p.demand_ref = std::move(dref);
  p.cost_kind = kind;
  return p;
}

OptConfig config(std::size_t starts = 2) {
  OptConfig c;
  c.n_starts = starts;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("tracking_cost examples") {
  CHECK(tracking_cost(1.0, 1.0, CostKind::absolute) == 0.0);
  CHECK(tracking_cost(1.5, 1.0, CostKind::quadratic) == 0.25);
  CHECK(tracking_cost(0.5, 1.0, CostKind::absolute) == 0.5);
  CHECK_THROWS_AS(tracking_cost(std::nan(""), 1.0, CostKind::absolute), ValidationError);
  CHECK_THROWS_AS(tracking_cost(1.0, INFINITY, CostKind::quadratic), ValidationError);
}

TEST_CASE("voltage_of_demand is the linear drop") {
  AncillaryMap a;
  CHECK(voltage_of_demand(0.0, a) == 1.0);
  CHECK(voltage_of_demand(1.0, a) == doctest::Approx(0.95));
  CHECK(voltage_of_demand(2.0, a) == doctest::Approx(0.90));
}

TEST_CASE("names round-trip and unknown names are rejected") {
  CHECK(parse_cost_kind(to_string(CostKind::quadratic)) == CostKind::quadratic);
  CHECK(parse_opt_mode(to_string(OptMode::simultaneous)) == OptMode::simultaneous);
  CHECK_THROWS_AS(parse_cost_kind("cubic"), ValidationError);
  CHECK_THROWS_AS(parse_opt_mode("greedy"), ValidationError);
}

TEST_CASE("OptConfig validation") {
  OptConfig c;
  CHECK_NOTHROW(c.validate());
  c.u_min = 0.6;
  c.u_max = 0.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = OptConfig{};
  c.n_starts = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = OptConfig{};
  c.tol = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("demand_ref equal to baseline gives the reference price") {
  std::vector<double> b(12);
  for (std::size_t t = 0; t < b.size(); ++t) b[t] = 1.0 + 0.3 * std::sin(0.5 * t);
  for (auto kind : {CostKind::absolute, CostKind::quadratic}) {
    const auto p = problem(10, 2, 0.4, 0.3, b, b, kind);
    const auto seq = sequential_optimize(p, config());
    const auto sim = simultaneous_optimize(p, config());
    for (double u : seq.prices) CHECK(u == doctest::Approx(0.4).epsilon(1e-12));
    for (double u : sim.prices) CHECK(u == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(seq.objective == doctest::Approx(0.0));
    CHECK(sim.objective == doctest::Approx(0.0));
  }
}

TEST_CASE("single-hour analytic inversion") {
  // dD = 2 * (0.5 - u) * 0.5 = 0.25  =>  u = 0.25
  const auto p = problem(10, 2, 0.5, 0.5, {1.0}, {1.25}, CostKind::quadratic);
  const auto sol = sequential_optimize(p, config());
  CHECK(sol.prices[0] == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(sol.objective < 1e-14);
  const oracle::Ff f{10, 2, 0.5};
  const double grid = oracle::grid_minimum(
      [&](const std::vector<double>& u) {
        return oracle::objective(f, 0.5, u, {1.0}, {1.25}, true);
      },
      oracle::linspace(0, 1, 10001), 1);
  CHECK(sol.objective <= grid + 1e-12);
}

TEST_CASE("unreachable reference drives the price to its lower bound") {
  // d_ref = b + k + 1 exceeds the largest attainable demand
  const auto p = problem(10, 2, 0.5, 0.5, {1.0}, {4.0}, CostKind::absolute);
  const auto sol = sequential_optimize(p, config());
  CHECK(sol.prices[0] <= 1e-9);
  CHECK(sol.objective > 0.0);
  CHECK(sol.objective == doctest::Approx(4.0 - 1.5));
}

TEST_CASE("ties break toward the nominal price") {
  // Reference below any attainable demand at x0 = 0: raising the price has
  // no effect, so every u >= u0 is optimal and u0 must be chosen.
  const auto p = problem(10, 2, 0.5, 0.0, {1.0}, {0.2}, CostKind::absolute);
  const auto sol = sequential_optimize(p, config());
  CHECK(sol.prices[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("solutions are recomputable, bounded and deterministic") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> b(8), d(8);
    for (std::size_t t = 0; t < b.size(); ++t) {
      b[t] = 0.5 + unit(rng);
      d[t] = 0.5 + unit(rng);
    }
    auto p = problem(0.5 + 5 * unit(rng), 4 * unit(rng), unit(rng), unit(rng), b, d,
                     trial % 2 ? CostKind::absolute : CostKind::quadratic);
    OptConfig cfg = config(4);
    cfg.u_min = 0.1;
    cfg.u_max = 0.9;
    for (auto mode : {OptMode::sequential, OptMode::simultaneous}) {
      const auto sol = optimize(p, cfg, mode);
      const auto again = optimize(p, cfg, mode, Execution::serial);
      CHECK(sol.prices == again.prices);
      CHECK(sol.objective == again.objective);
      for (double u : sol.prices) {
        CHECK(u >= 0.1);
        CHECK(u <= 0.9);
      }
      const auto roll = ff::rollout(p.x0, sol.prices, p.baseline, p.params);
      CHECK(roll.demand == sol.demand);
      CHECK(std::abs(p.total_objective(sol.prices) - sol.objective) <= 1e-9);
      for (std::size_t t = 0; t < d.size(); ++t)
        CHECK(sol.residuals[t] == doctest::Approx(std::abs(sol.demand[t] - d[t])));
    }
  }
}

TEST_CASE("simultaneous beats a 3-level brute force on N=3") {
  const oracle::Ff f{2.0, 3.0, 0.4};
  const std::vector<double> b{1.0, 0.8, 1.2}, d{1.4, 0.6, 1.0};
  for (auto kind : {CostKind::absolute, CostKind::quadratic}) {
    const auto p = problem(f.c, f.k, f.u0, 0.5, b, d, kind);
    const auto sol = simultaneous_optimize(p, config(4));
    const double grid = oracle::grid_minimum(
        [&](const std::vector<double>& u) {
          return oracle::objective(f, 0.5, u, b, d, kind == CostKind::quadratic);
        },
        {0.0, 0.4, 1.0}, 3);
    CHECK(sol.objective <= grid + 1e-6);
    CHECK(sol.objective <= sequential_optimize(p, config()).objective);
  }
}

TEST_CASE("library objective matches the independent oracle") {
  const oracle::Ff f{3.0, 2.5, 0.45};
  const std::vector<double> b{1.0, 1.1, 0.9, 1.3}, d{1.2, 0.7, 1.0, 1.6};
  const std::vector<double> u{0.1, 0.8, 0.45, 0.0};
  auto p = problem(f.c, f.k, f.u0, 0.7, b, d, CostKind::absolute);
  CHECK(p.total_objective(u) == doctest::Approx(oracle::objective(f, 0.7, u, b, d, false)));
  AncillaryMap a;
  a.v_ref = {0.97};
  a.weight_v = 3;
  a.weight_u = 0.5;
  p.ancillary = a;
  p.cost_kind = CostKind::quadratic;
  const oracle::Anc anc{1.0, 0.05, 0.97, 3.0, 0.5, 0.45};
  CHECK(p.total_objective(u) == doctest::Approx(oracle::objective(f, 0.7, u, b, d, true, &anc)));
}

TEST_CASE("adjoint gradient matches central differences") {
  const auto p = problem(6, 2, 0.5, 0.5, {1.0, 1.2, 0.9, 1.1}, {1.3, 0.8, 1.2, 0.9},
                         CostKind::quadratic);
  const std::vector<double> u{0.2, 0.7, 0.3, 0.8};
  const auto g = p.gradient(u);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double h = 1e-6;
    auto up = u, dn = u;
    up[i] += h;
    dn[i] -= h;
    const double fd = (p.total_objective(up) - p.total_objective(dn)) / (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("larger voltage weight pulls the voltage toward its reference") {
  auto p = problem(10, 2, 0.5, 0.5, {1.0}, {1.0}, CostKind::quadratic);
  AncillaryMap a;
  a.v_ref = {0.94};  // attained at demand 1.2
  double prev = INFINITY;
  for (double w : {1.0, 10.0, 100.0}) {
    a.weight_v = w;
    p.ancillary = a;
    const auto sol = sequential_optimize(p, config());
    CHECK(sol.ancillary_used);
    const double gap = std::abs(voltage_of_demand(sol.demand[0], a) - 0.94);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("problem validation") {
  auto p = problem(10, 2, 0.5, 0.5, {1.0, 1.0}, {1.0}, CostKind::absolute);
  CHECK_THROWS_AS(sequential_optimize(p, config()), ValidationError);
  p.demand_ref = {1.0, 1.0};
  p.x0.x = 1.5;
  CHECK_THROWS_AS(simultaneous_optimize(p, config()), ValidationError);
  p.x0.x = 0.5;
  AncillaryMap a;
  a.v_ref = {1.0, 1.0, 1.0};
  p.ancillary = a;
  CHECK_THROWS_AS(sequential_optimize(p, config()), ValidationError);
}

TEST_CASE("metrics") {
  PriceSolution sol;
  sol.prices = {0.1, 0.2, 0.3};
  sol.demand = {1.0, 2.0, 3.0};
  const auto m = metrics(sol, std::vector<double>{1.0, 1.5, 3.5});
  CHECK(m.sse == doctest::Approx(0.5));
  CHECK(m.sum_penalty == doctest::Approx(0.6));
  CHECK_THROWS_AS(metrics(sol, std::vector<double>{1.0}), ValidationError);
}
