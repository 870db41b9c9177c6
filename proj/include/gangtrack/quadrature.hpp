#pragma once

#include <cmath>
#include <cstddef>

namespace gangtrack {

/// Axis-aligned integration rectangle.
struct Rect {
  double x0, x1, y0, y1;
};

/// Tensor-product trapezoid rule with n points per axis (n >= 2).
template <class F>
double trapezoid_2d(const F& f, const Rect& r, std::size_t n) {
  const double hx = (r.x1 - r.x0) / static_cast<double>(n - 1);
  const double hy = (r.y1 - r.y0) / static_cast<double>(n - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wx = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const double x = r.x0 + hx * static_cast<double>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double wy = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      total += wx * wy * f(x, r.y0 + hy * static_cast<double>(j));
    }
  }
  return total * hx * hy;
}

struct QuadratureResult {
  double value = 0.0;
  double last_change = 0.0;
  std::size_t points_per_axis = 0;
};

/// Doubles the resolution until two successive estimates differ by less than
/// tol (absolute) or max_points per axis is reached.
template <class F>
QuadratureResult adaptive_trapezoid_2d(const F& f, const Rect& r, std::size_t n0, double tol,
                                       std::size_t max_points = 4097) {
  std::size_t n = n0 < 3 ? 3 : n0;
  double prev = trapezoid_2d(f, r, n);
  while (true) {
    const std::size_t next = 2 * n - 1;
    if (next > max_points) return {prev, INFINITY, n};
    const double cur = trapezoid_2d(f, r, next);
    const double change = std::fabs(cur - prev);
    if (change < tol) return {cur, change, next};
    prev = cur;
    n = next;
  }
}

}  // namespace gangtrack
