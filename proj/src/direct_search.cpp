#include "flexprice/direct_search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flexprice/errors.hpp"

namespace flexprice::opt {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

struct Simplex {
  std::vector<std::vector<double>> vertices;
  std::vector<double> values;
};

class BoxProjector {
 public:
  BoxProjector(std::span<const double> lower, std::span<const double> upper)
      : lower_(lower), upper_(upper) {}

  void operator()(std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower_[i], upper_[i]);
  }

  double range(std::size_t i) const { return upper_[i] - lower_[i]; }
  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }

 private:
  std::span<const double> lower_;
  std::span<const double> upper_;
};

Simplex build_simplex(const Objective& f, const std::vector<double>& base,
                      double base_value, const BoxProjector& box, double step,
                      std::size_t& evaluations) {
  const std::size_t n = base.size();
  Simplex s;
  s.vertices.assign(n + 1, base);
  s.values.assign(n + 1, base_value);
  for (std::size_t i = 0; i < n; ++i) {
    auto& v = s.vertices[i + 1];
    const double h = step * box.range(i);
    // Step inward when the forward step would leave the box.
    v[i] = base[i] + h <= box.upper(i) ? base[i] + h : base[i] - h;
    v[i] = std::clamp(v[i], box.lower(i), box.upper(i));
    s.values[i + 1] = f(v);
    ++evaluations;
  }
  return s;
}

double diameter(const Simplex& s) {
  double d = 0.0;
  const auto& best = s.vertices[0];
  for (std::size_t j = 1; j < s.vertices.size(); ++j)
    for (std::size_t i = 0; i < best.size(); ++i)
      d = std::max(d, std::abs(s.vertices[j][i] - best[i]));
  return d;
}

void sort_simplex(Simplex& s) {
  std::vector<std::size_t> order(s.values.size());
  std::iota(order.begin(), order.end(), 0);
  // Stable so ties keep their construction order; keeps runs reproducible.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
  Simplex sorted;
  sorted.vertices.reserve(order.size());
  sorted.values.reserve(order.size());
  for (auto k : order) {
    sorted.vertices.push_back(std::move(s.vertices[k]));
    sorted.values.push_back(s.values[k]);
  }
  s = std::move(sorted);
}

// One Nelder-Mead run from a fresh simplex around `base`. Returns iterations used.
std::size_t run_simplex(const Objective& f, std::vector<double>& best_x, double& best_f,
                        const BoxProjector& box, const NelderMeadOptions& opt,
                        std::size_t budget, std::size_t& evaluations) {
  const std::size_t n = best_x.size();
  Simplex s = build_simplex(f, best_x, best_f, box, opt.initial_step, evaluations);
  std::vector<double> centroid(n), trial(n), trial2(n);

  auto point_along = [&](double coeff, std::vector<double>& out) {
    const auto& worst = s.vertices[n];
    for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + coeff * (centroid[i] - worst[i]);
    box(out);
  };

  std::size_t it = 0;
  for (; it < budget; ++it) {
    sort_simplex(s);
    if (s.values[n] - s.values[0] <= opt.f_tol && diameter(s) <= opt.x_tol) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += s.vertices[j][i];
    for (double& c : centroid) c /= static_cast<double>(n);

    point_along(kReflect, trial);
    const double f_reflect = f(trial);
    ++evaluations;

    if (f_reflect < s.values[0]) {
      point_along(kExpand, trial2);
      const double f_expand = f(trial2);
      ++evaluations;
      if (f_expand < f_reflect) {
        s.vertices[n] = trial2;
        s.values[n] = f_expand;
      } else {
        s.vertices[n] = trial;
        s.values[n] = f_reflect;
      }
      continue;
    }
    if (f_reflect < s.values[n - 1]) {
      s.vertices[n] = trial;
      s.values[n] = f_reflect;
      continue;
    }

    const bool outside = f_reflect < s.values[n];
    point_along(outside ? kContract : -kContract, trial2);
    const double f_contract = f(trial2);
    ++evaluations;
    if (f_contract < std::min(f_reflect, s.values[n])) {
      s.vertices[n] = trial2;
      s.values[n] = f_contract;
      continue;
    }

    for (std::size_t j = 1; j <= n; ++j) {
      for (std::size_t i = 0; i < n; ++i)
        s.vertices[j][i] = s.vertices[0][i] + kShrink * (s.vertices[j][i] - s.vertices[0][i]);
      box(s.vertices[j]);
      s.values[j] = f(s.vertices[j]);
      ++evaluations;
    }
  }
  sort_simplex(s);
  if (s.values[0] < best_f) {
    best_f = s.values[0];
    best_x = s.vertices[0];
  }
  return it;
}

}  // namespace

NelderMeadResult nelder_mead_box(const Objective& f, std::vector<double> start,
                                 std::span<const double> lower,
                                 std::span<const double> upper,
                                 const NelderMeadOptions& options) {
  if (lower.size() != start.size() || upper.size() != start.size())
    throw ValidationError("nelder_mead_box: bound dimensions differ from start");
  for (std::size_t i = 0; i < start.size(); ++i)
    if (!(lower[i] <= upper[i])) throw ValidationError("nelder_mead_box: empty box");

  const BoxProjector box(lower, upper);
  NelderMeadResult out;
  out.x = std::move(start);
  box(out.x);
  out.value = f(out.x);
  out.evaluations = 1;
  if (out.x.empty()) return out;

  for (std::size_t restart = 0; restart <= options.max_restarts; ++restart) {
    if (out.iterations >= options.max_iters) break;
    const double before = out.value;
    out.iterations += run_simplex(f, out.x, out.value, box, options,
                                  options.max_iters - out.iterations, out.evaluations);
    if (!(before - out.value > options.f_tol)) break;
  }
  return out;
}

ScalarResult golden_section(const std::function<double(double)>& f, double a, double b,
                            double x_tol, std::size_t max_iters) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);

  ScalarResult best{fc <= fd ? c : d, std::min(fc, fd), 0};
  while (b - a > x_tol && best.iterations < max_iters) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      if (fc < best.value) best = {c, fc, best.iterations};
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      if (fd < best.value) best = {d, fd, best.iterations};
    }
    ++best.iterations;
  }
  return best;
}

}  // namespace flexprice::opt
