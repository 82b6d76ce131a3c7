#pragma once

#include <string>
#include <vector>

#include "heatlab/jet.hpp"
#include "heatlab/midpoint.hpp"

namespace heatlab {

enum class ManifoldKind {
  Circle,
  Line,
  DirichletInterval,
  WeightedLine,
  WeightedCircle,
  HyperbolicRadial3,
};

const char* to_string(ManifoldKind kind);
ManifoldKind parse_manifold_kind(const std::string& name);

/// Drift potential f with Z = grad f. On line variants the coefficients are
/// polynomial, f(u) = sum_k c_k u^k. On circle variants they are a
/// trigonometric polynomial,
///   f(u) = c_0 + sum_{k>=1} c_{2k-1} cos(2 pi k u / L) + c_{2k} sin(2 pi k u / L).
struct Potential {
  std::vector<double> coeffs;

  bool is_zero() const;
  /// Polynomial degree (line) or trigonometric degree (circle).
  int degree(bool periodic) const;
};

/// Metric density g(u) = P(u) exp(rate * u); the metric is g(u) du^2.
struct MetricDensity {
  std::vector<double> poly{1.0};
  double exp_rate = 0.0;

  bool is_flat() const;
};

/// Closed arc [lo, hi] (a point when lo == hi). On the circle the arc runs
/// counterclockwise from lo to hi and hi - lo is at most L.
struct Arc {
  double lo = 0.0;
  double hi = 0.0;
};

using ClosedSet = std::vector<Arc>;

/// Open interval (line variants) or open arc (circle variants).
struct OpenArc {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

class Manifold1D {
 public:
  static Manifold1D circle(double length = 1.0);
  static Manifold1D line();
  static Manifold1D dirichlet_interval(double a, double b);
  static Manifold1D weighted_line(Potential f);
  static Manifold1D weighted_circle(double length, Potential f);
  static Manifold1D hyperbolic_radial3();

  /// Returns a copy with a non-flat metric density (calculus tests only).
  Manifold1D with_metric(MetricDensity g) const;

  ManifoldKind kind() const { return kind_; }
  double circumference() const { return length_; }
  double lower() const { return a_; }
  double upper() const { return b_; }
  const Potential& potential() const { return potential_; }
  const MetricDensity& metric() const { return metric_; }

  bool is_periodic() const;
  bool is_compact() const;
  bool has_drift() const { return !potential_.is_zero(); }
  int dimension() const;

  bool contains(double u) const;
  void require_contains(double u, const char* what) const;
  bool interior(double u) const;

  double potential_value(double u) const;
  /// Derivatives of f of orders 0..n at u.
  Jet potential_jet(double u, int n) const;
  /// Z(u) = f'(u) for the flat built-ins.
  double drift(double u) const;

  Jet metric_jet(double u, int n) const;

  /// Canonical representative of a point (mod L on circles).
  double normalize(double u) const;
  /// The lift of y closest to x (y itself off the circle).
  double nearest_lift(double x, double y) const;

  /// Short human-readable identifier, e.g. "circle(L=1)".
  std::string id() const;
  /// Stable fingerprint of every parameter, used for cache keys.
  std::string fingerprint() const;

 private:
  Manifold1D() = default;
  void validate() const;

  ManifoldKind kind_ = ManifoldKind::Line;
  double length_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  Potential potential_;
  MetricDensity metric_;
};

/// Riemannian distance for the flat built-ins and the radial coordinate of
/// the hyperbolic model.
double distance(const Manifold1D& m, double x, double y);

/// d(x, A, y) = inf over z in A of d(x, z) + d(z, y).
double distance_via(const Manifold1D& m, double x, const ClosedSet& set, double y);

/// Antipodal test on circle variants: |d(x, y) - L/2| <= 1e-12.
inline constexpr double kCutLocusTolerance = 1e-12;
bool is_cut_pair(const Manifold1D& m, double x, double y);
/// Distance from y to the cut locus of x (infinite off the circle).
double distance_to_cut_locus(const Manifold1D& m, double x, double y);

MidpointMeasure midpoint_measure(const Manifold1D& m, double x, double y, int n);

/// Christoffel symbol Gamma = g'/(2g) and its derivatives of orders 0..n.
Jet christoffel_jet(const Manifold1D& m, double u, int n);

}  // namespace heatlab
