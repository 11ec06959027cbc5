#pragma once

#include <span>
#include <vector>

namespace rhl {

/// Monotone piecewise-cubic Hermite interpolant with Fritsch-Carlson slopes.
///
/// Knots must be strictly increasing and values nondecreasing. The curve
/// passes exactly through every knot, is C1, and never leaves
/// [y_k, y_{k+1}] on interval k. Outside the knot range it is held constant.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> knots, std::vector<double> values);

  double operator()(double t) const;
  std::vector<double> evaluate(std::span<const double> ts) const;

  const std::vector<double>& knots() const noexcept { return x_; }
  const std::vector<double>& values() const noexcept { return y_; }
  const std::vector<double>& slopes() const noexcept { return m_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace rhl
