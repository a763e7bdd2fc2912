#pragma once

// Derivative-free minimization over a box. Trial points of the simplex are
// projected onto the bounds, so every evaluated point is feasible.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace flexprice::opt {

using Objective = std::function<double(std::span<const double>)>;

struct NelderMeadOptions {
  /// Initial simplex edge as a fraction of each coordinate's range.
  double initial_step = 0.05;
  /// Converged when the spread of simplex values and the simplex diameter
  /// both fall below these.
  double f_tol = 1e-12;
  double x_tol = 1e-10;
  std::size_t max_iters = 20000;
  /// A converged run is restarted from its best vertex with a fresh simplex
  /// while restarts keep improving by more than f_tol.
  std::size_t max_restarts = 8;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

/// The returned value never exceeds f(start) (after projecting start).
NelderMeadResult nelder_mead_box(const Objective& f, std::vector<double> start,
                                 std::span<const double> lower,
                                 std::span<const double> upper,
                                 const NelderMeadOptions& options = {});

/// Golden-section search for a minimum of f on [a, b]. Stops when the
/// bracket is narrower than x_tol or after max_iters. Returns the best
/// point evaluated.
struct ScalarResult {
  double x = 0.0;
  double value = 0.0;
  std::size_t iterations = 0;
};

ScalarResult golden_section(const std::function<double(double)>& f, double a,
                            double b, double x_tol, std::size_t max_iters);

}  // namespace flexprice::opt
