#pragma once

#include "elastoflow/grid.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>

namespace testing_support {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Random trigonometric polynomial with |k_i| <= band, amplitude coefficients in [-1, 1].
inline elastoflow::Field random_field(const elastoflow::Grid& grid, int band, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  elastoflow::Field f = elastoflow::Field::Zero(static_cast<Eigen::Index>(grid.size()));
  const int k2_max = grid.surface_dim() == 2 ? band : 0;
  for (int k1 = 0; k1 <= band; ++k1)
    for (int k2 = -k2_max; k2 <= k2_max; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const double a = dist(rng) * scale;
      const double b = dist(rng) * scale;
      f += grid.sample([&](double x1, double x2) {
        const double p = kTwoPi * (k1 * x1 + k2 * x2);
        return a * std::cos(p) + b * std::sin(p);
      });
    }
  return f;
}

/// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 50) {
  std::function<double(double, double, double, double, double, double, double, int)> recurse =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int level) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid);
        const double rm = 0.5 * (mid + hi);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (level <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
          return left + right + (left + right - whole) / 15.0;
        }
        return recurse(lo, mid, flo, flm, fmid, left, 0.5 * eps, level - 1) +
               recurse(mid, hi, fmid, frm, fhi, right, 0.5 * eps, level - 1);
      };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return recurse(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Eighth-order central first derivative of a smooth scalar function.
inline double central_derivative(const std::function<double(double)>& f, double x, double h) {
  static constexpr double w[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  double sum = 0.0;
  for (int j = 1; j <= 4; ++j) sum += w[j - 1] * (f(x + j * h) - f(x - j * h));
  return sum / h;
}

inline double max_abs(const elastoflow::Field& f) { return f.cwiseAbs().maxCoeff(); }

}  // namespace testing_support
