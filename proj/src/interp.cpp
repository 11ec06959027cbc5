#include "rhl/interp.hpp"

#include <algorithm>
#include <cmath>

#include "rhl/curves.hpp"
#include "rhl/error.hpp"

namespace rhl {

MonotoneCubic::MonotoneCubic(std::vector<double> knots, std::vector<double> values)
    : x_(std::move(knots)), y_(std::move(values)) {
  if (x_.empty() || x_.size() != y_.size())
    fail(ErrorCode::InvalidArgument, "MonotoneCubic: knots and values must be nonempty and equal length");
  if (!is_strictly_increasing(x_))
    fail(ErrorCode::InvalidArgument, "MonotoneCubic: knots must be strictly increasing");
  if (!is_nondecreasing(y_))
    fail(ErrorCode::InvalidArgument, "MonotoneCubic: values must be nondecreasing");

  const std::size_t n = x_.size();
  m_.assign(n, 0.0);
  if (n == 1) return;

  std::vector<double> delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) delta[k] = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);

  m_[0] = delta[0];
  m_[n - 1] = delta[n - 2];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    m_[k] = (delta[k - 1] > 0.0 && delta[k] > 0.0) ? 0.5 * (delta[k - 1] + delta[k]) : 0.0;
  }

  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (delta[k] == 0.0) {
      m_[k] = 0.0;
      m_[k + 1] = 0.0;
      continue;
    }
    const double a = m_[k] / delta[k];
    const double b = m_[k + 1] / delta[k];
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m_[k] = tau * a * delta[k];
      m_[k + 1] = tau * b * delta[k];
    }
  }
}

double MonotoneCubic::operator()(double t) const {
  if (t <= x_.front()) return y_.front();
  if (t >= x_.back()) return y_.back();
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[k + 1] - x_[k];
  const double s = (t - x_[k]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h01 = 3.0 * s2 - 2.0 * s3;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h11 = s3 - s2;
  const double p = y_[k] + (y_[k + 1] - y_[k]) * h01 + h * (m_[k] * h10 + m_[k + 1] * h11);
  return std::clamp(p, y_[k], y_[k + 1]);
}

std::vector<double> MonotoneCubic::evaluate(std::span<const double> ts) const {
  std::vector<double> out(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) out[i] = (*this)(ts[i]);
  return out;
}

}  // namespace rhl
