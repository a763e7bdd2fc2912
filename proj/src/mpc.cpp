#include "flexprice/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flexprice::mpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void TankModel::validate() const {
  if (!(c_top > 0.0 && c_bot > 0.0)) throw ValidationError("tank: capacitances must be > 0");
  if (!(ua_top >= 0.0 && ua_bot >= 0.0)) throw ValidationError("tank: loss coefficients must be >= 0");
  if (!(k_mix >= 0.0)) throw ValidationError("tank: k_mix must be >= 0");
  if (!(cop > 0.0)) throw ValidationError("tank: cop must be > 0");
  if (!(p_max > 0.0)) throw ValidationError("tank: p_max must be > 0");
  if (!(dt_hours > 0.0)) throw ValidationError("tank: dt_hours must be > 0");
}

void MpcConfig::validate() const {
  if (horizon < 1) throw ValidationError("mpc.horizon must be >= 1");
  if (!(t_min < t_max)) throw ValidationError("mpc comfort band requires t_min < t_max");
  if (!(slack_weight >= 0.0 && terminal_weight >= 0.0))
    throw ValidationError("mpc weights must be >= 0");
  if (t_term && !std::isfinite(*t_term)) throw ValidationError("mpc.t_term must be finite");
}

TankState tank_step(TankState s, double power, double ambient, double load, const TankModel& m) {
  if (!(power >= 0.0 && power <= m.p_max))
    throw ValidationError("tank_step: power " + std::to_string(power) + " outside [0, p_max]");
  if (!std::isfinite(s.t_top) || !std::isfinite(s.t_bot) || !std::isfinite(ambient) ||
      !std::isfinite(load))
    throw ValidationError("tank_step: non-finite input");
  const double exchange = m.k_mix * (s.t_top - s.t_bot);
  TankState next;
  next.t_top = s.t_top + m.dt_hours / m.c_top *
                             (m.cop * power - m.ua_top * (s.t_top - ambient) - load - exchange);
  next.t_bot = s.t_bot + m.dt_hours / m.c_bot * (exchange - m.ua_bot * (s.t_bot - ambient));
  return next;
}

namespace {

// t_top at steps 1..N as free_response + impulse * p.
struct Prediction {
  VectorXd free_response;
  MatrixXd impulse;
};

Prediction condense(TankState s0, const Disturbances& dist, const TankModel& m, std::size_t n) {
  Prediction pred;
  pred.free_response.resize(static_cast<Eigen::Index>(n));
  TankState s = s0;
  for (std::size_t t = 0; t < n; ++t) {
    s = tank_step(s, 0.0, dist.ambient[t], dist.load[t], m);
    pred.free_response[static_cast<Eigen::Index>(t)] = s.t_top;
  }

  Eigen::Matrix2d a;
  a << 1.0 - m.dt_hours / m.c_top * (m.ua_top + m.k_mix), m.dt_hours / m.c_top * m.k_mix,
      m.dt_hours / m.c_bot * m.k_mix, 1.0 - m.dt_hours / m.c_bot * (m.k_mix + m.ua_bot);
  Eigen::Vector2d response(m.dt_hours * m.cop / m.c_top, 0.0);
  std::vector<double> markov(n);
  for (std::size_t k = 0; k < n; ++k) {
    markov[k] = response[0];
    response = a * response;
  }
  const auto nn = static_cast<Eigen::Index>(n);
  pred.impulse = MatrixXd::Zero(nn, nn);
  for (Eigen::Index t = 0; t < nn; ++t)
    for (Eigen::Index j = 0; j <= t; ++j) pred.impulse(t, j) = markov[static_cast<std::size_t>(t - j)];
  return pred;
}

void check_inputs(TankState s0, std::span<const double> penalty, const Disturbances& dist,
                  std::size_t n) {
  if (!std::isfinite(s0.t_top) || !std::isfinite(s0.t_bot))
    throw ValidationError("mpc: initial state is not finite");
  if (penalty.size() < n) throw ValidationError("mpc: penalty shorter than horizon");
  if (dist.ambient.size() < n || dist.load.size() < n)
    throw ValidationError("mpc: disturbances shorter than horizon");
  for (std::size_t t = 0; t < n; ++t)
    if (!std::isfinite(penalty[t]) || !std::isfinite(dist.ambient[t]) ||
        !std::isfinite(dist.load[t]))
      throw ValidationError("mpc: non-finite input at step " + std::to_string(t));
}

}  // namespace

MpcSolution mpc_solve(TankState s0, std::span<const double> penalty, const Disturbances& dist,
                      const TankModel& m, const MpcConfig& cfg) {
  m.validate();
  cfg.validate();
  const std::size_t n = cfg.horizon;
  check_inputs(s0, penalty, dist, n);

  const auto nn = static_cast<Eigen::Index>(n);
  const Prediction pred = condense(s0, dist, m, n);
  const double t_term = cfg.terminal_setpoint();
  const VectorXd g_last = pred.impulse.row(nn - 1).transpose();
  const double c_last = pred.free_response[nn - 1];

  // z = [p_0..p_{N-1}, eps_1..eps_N]
  qp::QuadraticProgram problem;
  problem.hessian = MatrixXd::Zero(2 * nn, 2 * nn);
  problem.hessian.topLeftCorner(nn, nn) = 2.0 * cfg.terminal_weight * g_last * g_last.transpose();
  problem.hessian.bottomRightCorner(nn, nn).diagonal().setConstant(2.0 * cfg.slack_weight);
  problem.linear = VectorXd::Zero(2 * nn);
  for (Eigen::Index t = 0; t < nn; ++t)
    problem.linear[t] = penalty[static_cast<std::size_t>(t)] * m.dt_hours;
  problem.linear.head(nn) += 2.0 * cfg.terminal_weight * (c_last - t_term) * g_last;

  problem.constraints = MatrixXd::Zero(5 * nn, 2 * nn);
  problem.lower = VectorXd::Zero(5 * nn);
  const auto eye = MatrixXd::Identity(nn, nn);
  problem.constraints.block(0, 0, nn, nn) = eye;
  problem.constraints.block(nn, 0, nn, nn) = -eye;
  problem.lower.segment(nn, nn).setConstant(-m.p_max);
  problem.constraints.block(2 * nn, nn, nn, nn) = eye;
  problem.constraints.block(3 * nn, 0, nn, nn) = pred.impulse;
  problem.constraints.block(3 * nn, nn, nn, nn) = eye;
  problem.lower.segment(3 * nn, nn) = VectorXd::Constant(nn, cfg.t_min) - pred.free_response;
  problem.constraints.block(4 * nn, 0, nn, nn) = -pred.impulse;
  problem.constraints.block(4 * nn, nn, nn, nn) = eye;
  problem.lower.segment(4 * nn, nn) = pred.free_response - VectorXd::Constant(nn, cfg.t_max);

  const qp::QpSolution qp_sol = qp::solve_qp(problem);

  MpcSolution sol;
  sol.iterations = qp_sol.iterations;
  sol.powers.resize(n);
  const double snap = 1e-8 * m.p_max;
  for (std::size_t t = 0; t < n; ++t) {
    double p = std::clamp(qp_sol.z[static_cast<Eigen::Index>(t)], 0.0, m.p_max);
    if (p < snap) p = 0.0;
    if (p > m.p_max - snap) p = m.p_max;
    sol.powers[t] = p;
  }

  sol.states.resize(n + 1);
  sol.states[0] = s0;
  sol.slacks.resize(n);
  VectorXd z(2 * nn);
  for (std::size_t t = 0; t < n; ++t) {
    sol.states[t + 1] = tank_step(sol.states[t], sol.powers[t], dist.ambient[t], dist.load[t], m);
    const double top = sol.states[t + 1].t_top;
    // For fixed powers the optimal slack is exactly the band violation.
    sol.slacks[t] = std::max({0.0, cfg.t_min - top, top - cfg.t_max});
    sol.energy_cost += penalty[t] * sol.powers[t] * m.dt_hours;
    z[static_cast<Eigen::Index>(t)] = sol.powers[t];
    z[nn + static_cast<Eigen::Index>(t)] = sol.slacks[t];
  }

  const VectorXd predicted = pred.free_response + pred.impulse * z.head(nn);
  for (std::size_t t = 0; t < n; ++t)
    sol.dynamics_defect = std::max(
        sol.dynamics_defect, std::abs(predicted[static_cast<Eigen::Index>(t)] - sol.states[t + 1].t_top));

  double slack_cost = 0.0;
  for (double e : sol.slacks) slack_cost += e * e;
  const double terminal_gap = sol.states[n].t_top - t_term;
  sol.cost = sol.energy_cost + cfg.slack_weight * slack_cost +
             cfg.terminal_weight * terminal_gap * terminal_gap;
  sol.kkt = qp::kkt_residuals(problem, z, qp_sol.multipliers);

  if (qp_sol.status != qp::QpStatus::optimal)
    throw MpcSolveError("mpc: QP iteration cap reached (KKT residual " +
                            std::to_string(sol.kkt.max()) + ")",
                        std::move(sol));
  return sol;
}

ClosedLoop receding_horizon_run(TankState s0, std::span<const double> penalty,
                                const Disturbances& dist, const TankModel& m,
                                const MpcConfig& cfg, std::size_t sim_hours) {
  const std::size_t needed = sim_hours + cfg.horizon;
  if (penalty.size() < needed || dist.ambient.size() < needed || dist.load.size() < needed)
    throw ValidationError("receding horizon: penalty and disturbances must cover " +
                          std::to_string(needed) + " hours");

  ClosedLoop run;
  run.rows.reserve(sim_hours);
  TankState state = s0;
  for (std::size_t h = 0; h < sim_hours; ++h) {
    Disturbances window;
    window.ambient.assign(dist.ambient.begin() + h, dist.ambient.begin() + h + cfg.horizon);
    window.load.assign(dist.load.begin() + h, dist.load.begin() + h + cfg.horizon);
    const MpcSolution sol = mpc_solve(state, penalty.subspan(h, cfg.horizon), window, m, cfg);
    ++run.solves;
    run.max_kkt = std::max(run.max_kkt, sol.kkt.max());

    const double power = sol.powers[0];
    run.rows.push_back({h, state.t_top, state.t_bot, power, dist.ambient[h], dist.load[h], penalty[h]});
    const TankState next = tank_step(state, power, dist.ambient[h], dist.load[h], m);
    run.max_prediction_gap =
        std::max({run.max_prediction_gap, std::abs(next.t_top - sol.states[1].t_top),
                  std::abs(next.t_bot - sol.states[1].t_bot)});
    run.energy_cost += penalty[h] * power * m.dt_hours;
    state = next;
  }
  run.final_state = state;
  return run;
}

}  // namespace flexprice::mpc
