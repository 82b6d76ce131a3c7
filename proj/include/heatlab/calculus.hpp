#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "heatlab/jet.hpp"
#include "heatlab/midpoint.hpp"

namespace heatlab {

using Rational = boost::multiprecision::cpp_rational;

// Faa di Bruno in both directions. Both operate order by order through the
// set-partition sums; error bounds are propagated to first order.

/// Jet of log p from the jet of p. Requires p[0] > 0.
Jet log_jet(const Jet& p);

/// Jet of p = exp(l) from the jet of l.
Jet exp_jet(const Jet& l);

/// D'_N = sum over partitions pi of {1..N} of prod_{B in pi} C_{|B|}.
/// `c` holds C_1..C_M (c[0] is C_1); requires N <= M.
double exp_bound_constant(std::span<const double> c, int n);

/// y-jet of p written against a new measure nu': multiplies by the Radon-Nikodym
/// density d nu / d nu' (given as a jet in y) with the Leibniz rule.
Jet measure_change_jet(const Jet& p, const Jet& density, Measure target);

/// x-jet version: scales every order by the scalar density at y.
Jet measure_change_x_jet(const Jet& p, double density_at_y, Measure target);

/// Covariant derivatives of f in one dimension, in the coordinate frame.
/// Returned jet holds f at index 0 and nabla^k f at index k, k = 1..N.
/// `partial` must have order >= N and `christoffel` order >= N - 2.
Jet covariant_jet(const Jet& partial, const Jet& christoffel, int n);

struct CumulantResult {
  int order = 0;
  double value = 0.0;
  std::size_t blocks_used = 0;
  std::optional<Rational> exact;
};

/// Joint cumulant kappa(X, ..., X) of the first-order derivative variable
/// on the atoms of `measure`. Exact rational evaluation when every weight
/// and variable is dyadic with a denominator of at most 2^64.
CumulantResult joint_cumulant(const MidpointMeasure& measure, int n);

/// General joint cumulant kappa(X_1, ..., X_N): slot_values[i][a] is the
/// value of X_i at atom a, `weights` the atom probabilities.
double joint_cumulant(std::span<const double> weights,
                      const std::vector<std::vector<double>>& slot_values);

/// Exact (lossless) conversion of a finite double to a rational.
Rational to_rational(double v);

bool is_small_dyadic(double v);

}  // namespace heatlab
