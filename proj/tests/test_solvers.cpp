#include <doctest.h>

#include <cmath>
#include <vector>

#include "flexprice/direct_search.hpp"
#include "flexprice/qp.hpp"

using namespace flexprice;

TEST_CASE("golden_section finds an interior minimum") {
  const auto r = opt::golden_section([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0,
                                     1e-10, 500);
  CHECK(r.x == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(r.value < 1e-16);
}

TEST_CASE("golden_section returns an endpoint for monotone functions") {
  const auto r = opt::golden_section([](double x) { return -x; }, 0.2, 0.7, 1e-12, 500);
  CHECK(r.x == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("nelder_mead_box on a bounded quadratic") {
  const std::vector<double> lo{0.0, 0.0, 0.0}, hi{1.0, 1.0, 1.0};
  auto f = [](std::span<const double> x) {
    return (x[0] - 0.2) * (x[0] - 0.2) + 2 * (x[1] - 0.9) * (x[1] - 0.9) +
           (x[2] - 1.5) * (x[2] - 1.5);
  };
  const auto r = opt::nelder_mead_box(f, {0.5, 0.5, 0.5}, lo, hi);
  CHECK(r.x[0] == doctest::Approx(0.2).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(0.9).epsilon(1e-5));
  CHECK(r.x[2] == 1.0);  // optimum beyond the bound
  CHECK(r.value <= f(std::vector<double>{0.5, 0.5, 0.5}));
}

TEST_CASE("nelder_mead_box on Rosenbrock") {
  const std::vector<double> lo{-2.0, -2.0}, hi{2.0, 2.0};
  auto f = [](std::span<const double> x) {
    return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
  };
  const auto r = opt::nelder_mead_box(f, {-1.2, 1.0}, lo, hi);
  CHECK(r.value < 1e-10);
}

TEST_CASE("nelder_mead_box never worsens the start") {
  const std::vector<double> lo{0.0}, hi{1.0};
  auto f = [](std::span<const double> x) { return std::abs(x[0] - 0.5); };
  const auto r = opt::nelder_mead_box(f, {0.5}, lo, hi);
  CHECK(r.value == 0.0);
}

TEST_CASE("qp: box-constrained least squares") {
  // min (z0-2)^2 + (z1+1)^2  s.t. 0 <= z <= 1
  qp::QuadraticProgram p;
  p.hessian = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  p.linear = Eigen::Vector2d(-4.0, 2.0);
  p.constraints.resize(4, 2);
  p.constraints << 1, 0, 0, 1, -1, 0, 0, -1;
  p.lower = Eigen::Vector4d(0, 0, -1, -1);
  const auto s = qp::solve_qp(p);
  CHECK(s.status == qp::QpStatus::optimal);
  CHECK(s.z[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(s.z[1]) < 1e-9);
  CHECK(s.residuals.max() <= 1e-9);
  CHECK(s.multipliers[2] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(s.multipliers[1] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("qp: linear program at a vertex") {
  // min -z0 - 2 z1  s.t. z0 + z1 <= 1, z >= 0
  qp::QuadraticProgram p;
  p.hessian = Eigen::MatrixXd::Zero(2, 2);
  p.linear = Eigen::Vector2d(-1.0, -2.0);
  p.constraints.resize(3, 2);
  p.constraints << -1, -1, 1, 0, 0, 1;
  p.lower = Eigen::Vector3d(-1, 0, 0);
  const auto s = qp::solve_qp(p);
  CHECK(s.status == qp::QpStatus::optimal);
  CHECK(std::abs(s.z[0]) < 1e-9);
  CHECK(s.z[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.objective == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(s.residuals.max() <= 1e-9);
}

TEST_CASE("qp: unconstrained") {
  qp::QuadraticProgram p;
  p.hessian = Eigen::Matrix2d{{4, 1}, {1, 3}};
  p.linear = Eigen::Vector2d(1, 2);
  p.constraints.resize(0, 2);
  p.lower.resize(0);
  const auto s = qp::solve_qp(p);
  const Eigen::Vector2d expected = p.hessian.ldlt().solve(-p.linear);
  CHECK((s.z - expected).norm() < 1e-12);
}

TEST_CASE("qp: dimension mismatch is rejected") {
  qp::QuadraticProgram p;
  p.hessian = Eigen::MatrixXd::Identity(2, 2);
  p.linear = Eigen::VectorXd::Zero(3);
  p.constraints.resize(0, 2);
  p.lower.resize(0);
  CHECK_THROWS(qp::solve_qp(p));
}
