#pragma once

#include <vector>

namespace heatlab {

struct MidpointAtom {
  double point = 0.0;
  double weight = 0.0;
  /// Derivatives of d(., y) at y, orders 1..N, along the unit frame; the
  /// atom's point is the first argument.
  std::vector<double> variables;
};

/// Probability measure on the midpoints of the minimal geodesics from x to y.
struct MidpointMeasure {
  double x = 0.0;
  double y = 0.0;
  double distance = 0.0;
  std::vector<MidpointAtom> atoms;
};

}  // namespace heatlab
