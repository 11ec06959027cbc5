#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rhl {

/// A function sampled on a strictly increasing grid.
struct GridCurve {
  std::vector<double> grid;
  std::vector<double> values;

  std::size_t size() const noexcept { return grid.size(); }
};

/// Right-continuous step function, 0 before the first jump.
struct StepFunction {
  std::vector<double> jump_times;
  std::vector<double> cum_values;

  double operator()(double t) const;
};

std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

/// Trapezoid quadrature weights for a strictly increasing grid.
std::vector<double> trapezoid_weights(std::span<const double> grid);

double weighted_inner(std::span<const double> a, std::span<const double> b,
                      std::span<const double> weights);

bool is_strictly_increasing(std::span<const double> v);
bool is_nondecreasing(std::span<const double> v);

/// Sorted union of two increasing grids; values closer than `tol` collapse.
std::vector<double> merge_grids(std::span<const double> a, std::span<const double> b,
                                double tol = 0.0);

/// Linear interpolation on a grid, constant outside.
double interp_linear(std::span<const double> grid, std::span<const double> values, double t);

/// Neumaier compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace rhl
