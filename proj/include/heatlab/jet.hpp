#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace heatlab {

/// Reference volume a kernel density is written against.
enum class Measure {
  Riemannian,    // mu
  Symmetrizing,  // nu = e^f mu
  Custom,
};

const char* to_string(Measure m);

struct JetCenter {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Derivatives of orders 0..N of a scalar function of one coordinate, each
/// carrying a nonnegative bound on its absolute evaluation error.
struct Jet {
  JetCenter center;
  std::vector<double> values;
  std::vector<double> error_bounds;
  Measure measure = Measure::Riemannian;

  Jet() = default;
  Jet(std::vector<double> vals, std::vector<double> errs = {});

  int order() const { return static_cast<int>(values.size()) - 1; }
  double operator[](std::size_t k) const { return values[k]; }
  double& operator[](std::size_t k) { return values[k]; }
  double error(std::size_t k) const { return error_bounds[k]; }

  /// Jet of a constant function (or of the value `v` with zero higher orders).
  static Jet constant(double v, int order);

  /// Truncates or zero-pads to the requested order.
  Jet truncated(int order) const;
};

/// Leibniz product of two jets at the same point.
Jet jet_product(const Jet& a, const Jet& b);

/// Jet of the derivative: orders 0..N-1 of f'.
Jet jet_derivative(const Jet& a);

Jet jet_scaled(const Jet& a, double s);

Jet jet_sum(const Jet& a, const Jet& b);

}  // namespace heatlab
