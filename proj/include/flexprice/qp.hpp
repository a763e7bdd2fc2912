#pragma once

// Dense convex quadratic programming:
//
//   minimize   1/2 z' P z + q' z
//   subject to A z >= b
//
// P must be symmetric positive semidefinite. Solved by a primal-dual
// interior-point method with Mehrotra predictor-corrector steps; the final
// iterate is polished by an equality-constrained solve on its active set.

#include <cstddef>

#include <Eigen/Dense>

namespace flexprice::qp {

struct QuadraticProgram {
  Eigen::MatrixXd hessian;      // P, n x n
  Eigen::VectorXd linear;       // q, n
  Eigen::MatrixXd constraints;  // A, m x n
  Eigen::VectorXd lower;        // b, m

  void validate() const;
};

struct QpOptions {
  double tol = 1e-11;
  std::size_t max_iters = 200;
};

enum class QpStatus { optimal, max_iterations };

/// Infinity norms of the first-order optimality conditions for multipliers
/// lambda attached to the rows of A.
struct KktResiduals {
  double stationarity = 0.0;     // |P z + q - A' lambda|
  double primal = 0.0;           // max(0, b - A z)
  double dual = 0.0;             // max(0, -lambda)
  double complementarity = 0.0;  // |lambda_i (A z - b)_i|

  double max() const;
};

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& multipliers);

struct QpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  std::size_t iterations = 0;
  QpStatus status = QpStatus::max_iterations;
  KktResiduals residuals;
};

/// Never throws on non-convergence; inspect `status`. Throws ValidationError
/// on malformed dimensions or non-finite data.
QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& options = {});

}  // namespace flexprice::qp
