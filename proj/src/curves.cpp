#include "rhl/curves.hpp"

#include <algorithm>
#include <cmath>

#include "rhl/error.hpp"

namespace rhl {

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return 0.0;
  return cum_values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  if (n < 2 || !(t0 < t1)) fail(ErrorCode::InvalidArgument, "uniform_grid needs n >= 2 and t0 < t1");
  std::vector<double> g(n);
  const double h = (t1 - t0) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = t0 + h * static_cast<double>(i);
  g.back() = t1;
  return g;
}

std::vector<double> trapezoid_weights(std::span<const double> grid) {
  const std::size_t n = grid.size();
  std::vector<double> w(n, 0.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = 0.5 * (grid[i + 1] - grid[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

double weighted_inner(std::span<const double> a, std::span<const double> b,
                      std::span<const double> weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * a[i] * b[i];
  return s;
}

bool is_strictly_increasing(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

bool is_nondecreasing(std::span<const double> v) {
  return std::is_sorted(v.begin(), v.end());
}

std::vector<double> merge_grids(std::span<const double> a, std::span<const double> b,
                                double tol) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  std::vector<double> uniq;
  uniq.reserve(out.size());
  for (double x : out) {
    if (uniq.empty() || x - uniq.back() > tol) uniq.push_back(x);
  }
  return uniq;
}

double interp_linear(std::span<const double> grid, std::span<const double> values, double t) {
  if (t <= grid.front()) return values.front();
  if (t >= grid.back()) return values.back();
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double s = (t - grid[k]) / (grid[k + 1] - grid[k]);
  return values[k] + s * (values[k + 1] - values[k]);
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

}  // namespace rhl
