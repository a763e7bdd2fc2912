#pragma once

// Two-node stratified storage tank heated by a heat pump, and a
// receding-horizon controller that minimizes penalty-weighted electricity use
// subject to a soft comfort band on the top-node temperature.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "flexprice/errors.hpp"
#include "flexprice/qp.hpp"

namespace flexprice::mpc {

struct TankModel {
  double c_top = 5.0;   // kWh/degC
  double c_bot = 5.0;   // kWh/degC
  double ua_top = 0.05; // kW/degC
  double ua_bot = 0.05; // kW/degC
  double k_mix = 0.5;   // kW/degC
  double cop = 3.0;
  double p_max = 5.0;   // kW electrical
  double dt_hours = 1.0;

  void validate() const;
};

struct TankState {
  double t_top = 60.0;
  double t_bot = 50.0;
};

struct MpcConfig {
  std::size_t horizon = 24;
  double t_min = 50.0;
  double t_max = 70.0;
  double slack_weight = 10.0;     // cost per degC^2 of comfort violation
  double terminal_weight = 0.05;  // cost per degC^2 of terminal deviation
  /// Terminal setpoint for t_top; defaults to the middle of the band.
  std::optional<double> t_term;

  double terminal_setpoint() const { return t_term.value_or(0.5 * (t_min + t_max)); }
  void validate() const;
};

struct Disturbances {
  std::vector<double> ambient;  // degC
  std::vector<double> load;     // kW heat drawn from the top node
};

/// Explicit Euler step of the tank. Throws ValidationError when power is
/// outside [0, p_max] or inputs are non-finite.
TankState tank_step(TankState s, double power, double ambient, double load,
                    const TankModel& m);

struct MpcSolution {
  std::vector<double> powers;     // N
  std::vector<TankState> states;  // N + 1, states[0] = s0
  std::vector<double> slacks;     // N, comfort violation of t_top at steps 1..N
  double cost = 0.0;              // full objective including constant terms
  double energy_cost = 0.0;       // sum penalty_t * p_t * dt
  qp::KktResiduals kkt;
  std::size_t iterations = 0;
  /// Largest gap between the condensed affine prediction and simulated t_top.
  double dynamics_defect = 0.0;
};

/// Raised when the QP does not converge; carries the best iterate found.
class MpcSolveError : public SolverError {
 public:
  MpcSolveError(const std::string& what, MpcSolution partial)
      : SolverError(what), partial_(std::move(partial)) {}
  const MpcSolution& partial() const { return partial_; }

 private:
  MpcSolution partial_;
};

/// Solves one finite-horizon problem over penalty[0..N) and dist[0..N).
MpcSolution mpc_solve(TankState s0, std::span<const double> penalty,
                      const Disturbances& dist, const TankModel& m,
                      const MpcConfig& cfg);

struct ClosedLoopRow {
  std::size_t hour = 0;
  double t_top = 0.0;  // at the start of the hour
  double t_bot = 0.0;
  double power = 0.0;  // applied during the hour
  double ambient = 0.0;
  double load = 0.0;
  double penalty = 0.0;
};

struct ClosedLoop {
  std::vector<ClosedLoopRow> rows;
  TankState final_state;
  double energy_cost = 0.0;  // sum penalty * power * dt over applied controls
  double max_kkt = 0.0;      // worst KKT residual over all solves
  double max_prediction_gap = 0.0;  // |predicted - realized| one step ahead
  std::size_t solves = 0;
};

/// Applies the first control of each solve to the plant (the same model).
ClosedLoop receding_horizon_run(TankState s0, std::span<const double> penalty,
                                const Disturbances& dist, const TankModel& m,
                                const MpcConfig& cfg, std::size_t sim_hours);

}  // namespace flexprice::mpc
