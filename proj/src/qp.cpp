#include "flexprice/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "flexprice/errors.hpp"

namespace flexprice::qp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void QuadraticProgram::validate() const {
  const auto n = hessian.rows();
  if (hessian.cols() != n || linear.size() != n || constraints.cols() != n ||
      lower.size() != constraints.rows())
    throw ValidationError("quadratic program: inconsistent dimensions");
  if (!hessian.allFinite() || !linear.allFinite() || !constraints.allFinite() ||
      !lower.allFinite())
    throw ValidationError("quadratic program: non-finite data");
}

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

KktResiduals kkt_residuals(const QuadraticProgram& qp, const VectorXd& z,
                           const VectorXd& multipliers) {
  KktResiduals r;
  const VectorXd slack = qp.constraints * z - qp.lower;
  r.stationarity =
      (qp.hessian * z + qp.linear - qp.constraints.transpose() * multipliers).lpNorm<Eigen::Infinity>();
  if (slack.size() == 0) return r;
  r.primal = std::max(0.0, (-slack).maxCoeff());
  r.dual = std::max(0.0, (-multipliers).maxCoeff());
  r.complementarity = multipliers.cwiseProduct(slack).lpNorm<Eigen::Infinity>();
  return r;
}

namespace {

// Largest alpha in (0, 1] keeping v + alpha * dv >= 0.
double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

struct Direction {
  VectorXd dz, ds, dl;
};

double kkt_score(const KktResiduals& r, double q_scale, double b_scale) {
  return std::max({r.stationarity / q_scale, r.primal / b_scale, r.dual, r.complementarity});
}

// Guesses the active set from an interior iterate (lambda_i > s_i) and solves
// the equality-constrained KKT system on it. Returns false when the guess
// yields an infeasible point or a negative multiplier.
bool polish(const QuadraticProgram& qp, const VectorXd& s, const VectorXd& lambda, VectorXd& z_out,
            VectorXd& lambda_out) {
  const auto n = qp.hessian.rows();
  const auto m = qp.constraints.rows();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i)
    if (lambda[i] > s[i]) active.push_back(i);
  const auto k = static_cast<Eigen::Index>(active.size());

  MatrixXd kkt = MatrixXd::Zero(n + k, n + k);
  VectorXd rhs(n + k);
  kkt.topLeftCorner(n, n) = qp.hessian;
  rhs.head(n) = -qp.linear;
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto i = active[static_cast<std::size_t>(j)];
    kkt.block(0, n + j, n, 1) = -qp.constraints.row(i).transpose();
    kkt.block(n + j, 0, 1, n) = qp.constraints.row(i);
    rhs[n + j] = qp.lower[i];
  }
  const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  if (!sol.allFinite()) return false;

  VectorXd mult = VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < k; ++j) {
    // Round-off negatives on degenerate constraints are clipped; the caller
    // keeps the polished point only if its residuals actually improve.
    if (sol[n + j] < -1e-9 * (1.0 + qp.linear.lpNorm<Eigen::Infinity>())) return false;
    mult[active[static_cast<std::size_t>(j)]] = std::max(0.0, sol[n + j]);
  }
  z_out = sol.head(n);
  lambda_out = std::move(mult);
  return true;
}

}  // namespace

QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& options) {
  qp.validate();
  const auto n = qp.hessian.rows();
  const auto m = qp.constraints.rows();
  const MatrixXd& P = qp.hessian;
  const MatrixXd& A = qp.constraints;
  const VectorXd& q = qp.linear;
  const VectorXd& b = qp.lower;

  QpSolution best;
  best.z = VectorXd::Zero(n);
  best.multipliers = VectorXd::Zero(m);

  if (m == 0) {
    // Unconstrained: stationary point of a PSD quadratic.
    Eigen::LDLT<MatrixXd> ldlt(P);
    best.z = ldlt.solve(-q);
    best.residuals = kkt_residuals(qp, best.z, best.multipliers);
    best.status = best.residuals.stationarity <= options.tol * (1.0 + q.lpNorm<Eigen::Infinity>())
                      ? QpStatus::optimal
                      : QpStatus::max_iterations;
    best.objective = 0.5 * best.z.dot(P * best.z) + q.dot(best.z);
    return best;
  }

  VectorXd z = VectorXd::Zero(n);
  VectorXd s = (A * z - b).cwiseMax(1.0);
  VectorXd lambda = VectorXd::Ones(m);

  const double q_scale = 1.0 + q.lpNorm<Eigen::Infinity>();
  const double b_scale = 1.0 + b.lpNorm<Eigen::Infinity>();
  double best_score = std::numeric_limits<double>::infinity();

  std::size_t it = 0;
  for (;; ++it) {
    const VectorXd r_dual = P * z + q - A.transpose() * lambda;
    const VectorXd r_primal = A * z - s - b;
    const double mu = s.dot(lambda) / static_cast<double>(m);

    const KktResiduals kkt = kkt_residuals(qp, z, lambda);
    const double score = std::max({kkt.stationarity / q_scale, r_primal.lpNorm<Eigen::Infinity>() / b_scale,
                                   kkt.primal / b_scale, kkt.complementarity, mu});
    if (score < best_score) {
      best_score = score;
      best.z = z;
      best.multipliers = lambda;
      best.iterations = it;
      best.residuals = kkt;
    }
    if (r_dual.lpNorm<Eigen::Infinity>() <= options.tol * q_scale &&
        r_primal.lpNorm<Eigen::Infinity>() <= options.tol * b_scale && mu <= options.tol) {
      best.status = QpStatus::optimal;
      break;
    }
    if (it >= options.max_iters) break;

    const VectorXd d = lambda.cwiseQuotient(s);
    MatrixXd normal = P + A.transpose() * d.asDiagonal() * A;
    Eigen::LLT<MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) {
      normal.diagonal().array() += 1e-12 * (1.0 + normal.diagonal().cwiseAbs().maxCoeff());
      llt.compute(normal);
    }

    auto solve_direction = [&](const VectorXd& r_comp) {
      Direction dir;
      const VectorXd rhs =
          -r_dual + A.transpose() * (d.cwiseProduct(-r_primal) + r_comp.cwiseQuotient(s));
      dir.dz = llt.solve(rhs);
      dir.dl = d.cwiseProduct(-r_primal - A * dir.dz) + r_comp.cwiseQuotient(s);
      dir.ds = (r_comp - s.cwiseProduct(dir.dl)).cwiseQuotient(lambda);
      return dir;
    };

    // Predictor.
    const VectorXd r_aff = -s.cwiseProduct(lambda);
    const Direction aff = solve_direction(r_aff);
    const double alpha_aff = std::min(max_step(s, aff.ds), max_step(lambda, aff.dl));
    const double mu_aff =
        (s + alpha_aff * aff.ds).dot(lambda + alpha_aff * aff.dl) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3);

    // Corrector.
    const VectorXd r_comp =
        r_aff - aff.ds.cwiseProduct(aff.dl) + VectorXd::Constant(m, sigma * mu);
    const Direction dir = solve_direction(r_comp);
    const double alpha =
        std::min(1.0, 0.995 * std::min(max_step(s, dir.ds), max_step(lambda, dir.dl)));

    z += alpha * dir.dz;
    s += alpha * dir.ds;
    lambda += alpha * dir.dl;
    if (!z.allFinite() || !lambda.allFinite()) break;
  }

  if (best.status == QpStatus::optimal) {
    best.z = z;
    best.multipliers = lambda;
    best.iterations = it;
    best.residuals = kkt_residuals(qp, z, lambda);
    VectorXd z_p, lambda_p;
    if (polish(qp, s, lambda, z_p, lambda_p)) {
      const KktResiduals r = kkt_residuals(qp, z_p, lambda_p);
      if (kkt_score(r, q_scale, b_scale) < kkt_score(best.residuals, q_scale, b_scale)) {
        best.z = std::move(z_p);
        best.multipliers = std::move(lambda_p);
        best.residuals = r;
      }
    }
  }
  best.objective = 0.5 * best.z.dot(P * best.z) + q.dot(best.z);
  return best;
}

}  // namespace flexprice::qp
