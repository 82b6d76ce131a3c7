#pragma once

#include <cmath>
#include <limits>

#include "heatlab/error.hpp"

namespace heatlab {

template <class F>
Derivative ridders(F&& f, double x, double h0, int order) {
  constexpr int kTable = 10;
  constexpr double kShrink = 1.4;
  constexpr double kShrink2 = kShrink * kShrink;
  constexpr double kSafe = 2.0;
  if (order != 1 && order != 2) throw ArgumentError("ridders: order must be 1 or 2");
  if (!(h0 > 0.0)) throw StepSizeError("ridders: initial step must be positive");

  auto central = [&](double h) {
    if (x + h == x) throw StepSizeError("ridders: step underflow");
    if (order == 1) return (f(x + h) - f(x - h)) / (2.0 * h);
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
  };

  double a[kTable][kTable];
  double h = h0;
  a[0][0] = central(h);
  Derivative best{a[0][0], std::numeric_limits<double>::infinity()};
  for (int i = 1; i < kTable; ++i) {
    h /= kShrink;
    a[0][i] = central(h);
    double fac = kShrink2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kShrink2;
      const double err =
          std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (err <= best.error) {
        best.error = err;
        best.value = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * best.error) break;
  }
  return best;
}

}  // namespace heatlab
