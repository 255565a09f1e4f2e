#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "cbvcc/types.hpp"

namespace cbvcc::tracking {

// Natural cubic spline (zero second derivative at both ends) through
// strictly increasing knots.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::span<const double> knots, std::span<const double> values)
      : t_(knots.begin(), knots.end()), y_(values.begin(), values.end()) {
    const std::size_t n = t_.size();
    if (n < 2 || y_.size() != n) {
      throw Error(ErrorKind::too_short, "spline needs at least two knots with matching values");
    }
    for (std::size_t i = 1; i < n; ++i) {
      if (!(t_[i] > t_[i - 1])) throw Error(ErrorKind::range, "spline knots must increase");
    }
    m_.assign(n, 0.0);
    if (n == 2) return;

    // Thomas algorithm on the interior second-derivative system.
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      diag[i - 1] = 2.0 * (h0 + h1);
      upper[i - 1] = h1;
      rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double lower = t_[i + 1] - t_[i];
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i >= 1; --i) {
      m_[i] = (rhs[i - 1] - upper[i - 1] * m_[i + 1]) / diag[i - 1];
    }
  }

  double operator()(double t) const {
    const std::size_t n = t_.size();
    std::size_t i = 0;
    if (t >= t_[n - 1]) {
      i = n - 2;
    } else if (t > t_[0]) {
      i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    }
    const double h = t_[i + 1] - t_[i];
    const double a = (t_[i + 1] - t) / h;
    const double b = (t - t_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  const std::vector<double>& second_derivatives() const noexcept { return m_; }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace cbvcc::tracking
