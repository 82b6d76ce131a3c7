#include "heatlab/calculus.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "heatlab/error.hpp"
#include "heatlab/partitions.hpp"

namespace heatlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

struct ProductWithSensitivity {
  double product = 1.0;
  // sum_i |prod_{j != i} v_j| * err_i
  double sensitivity = 0.0;
};

// Product of values[sizes[i]] together with its first-order error term.
ProductWithSensitivity block_product(const std::vector<int>& sizes,
                                     const Jet& jet) {
  ProductWithSensitivity out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    double others = 1.0;
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      if (j != i) others *= jet[sizes[j]];
    }
    out.sensitivity += std::abs(others) * jet.error(sizes[i]);
    out.product *= jet[sizes[i]];
  }
  return out;
}

}  // namespace

Jet log_jet(const Jet& p) {
  if (p.values.empty()) throw ArgumentError("log_jet: empty jet");
  if (!(p[0] > 0.0)) {
    throw DomainError("log_jet: order-0 value must be strictly positive, got " +
                      std::to_string(p[0]));
  }
  const int n = p.order();
  Jet out;
  out.center = p.center;
  out.measure = p.measure;
  out.values.assign(n + 1, 0.0);
  out.error_bounds.assign(n + 1, 0.0);
  out.values[0] = std::log(p[0]);
  out.error_bounds[0] = p.error(0) / p[0] + kEps * std::abs(out.values[0]);

  for (int k = 1; k <= n; ++k) {
    double sum = 0.0;
    double err = 0.0;
    double magnitude = 0.0;
    for (const auto& group : block_signatures(k)) {
      const int m = static_cast<int>(group.sizes.size());
      const double coeff = static_cast<double>(group.count) *
                           ((m % 2 == 1) ? 1.0 : -1.0) * factorial(m - 1);
      const double inv = std::pow(p[0], -m);
      const auto prod = block_product(group.sizes, p);
      const double term = coeff * inv * prod.product;
      sum += term;
      magnitude += std::abs(term);
      err += std::abs(coeff) * (m * std::abs(inv / p[0] * prod.product) * p.error(0) +
                                inv * prod.sensitivity);
    }
    out.values[k] = sum;
    out.error_bounds[k] = err + 4.0 * k * kEps * magnitude;
  }
  return out;
}

Jet exp_jet(const Jet& l) {
  if (l.values.empty()) throw ArgumentError("exp_jet: empty jet");
  const int n = l.order();
  Jet out;
  out.center = l.center;
  out.measure = l.measure;
  out.values.assign(n + 1, 0.0);
  out.error_bounds.assign(n + 1, 0.0);
  const double base = std::exp(l[0]);
  out.values[0] = base;
  out.error_bounds[0] = base * (l.error(0) + kEps);

  for (int k = 1; k <= n; ++k) {
    double sum = 0.0;
    double err = 0.0;
    double magnitude = 0.0;
    for (const auto& group : block_signatures(k)) {
      const double count = static_cast<double>(group.count);
      const auto prod = block_product(group.sizes, l);
      sum += count * prod.product;
      magnitude += std::abs(count * prod.product);
      err += count * prod.sensitivity;
    }
    out.values[k] = base * sum;
    out.error_bounds[k] = base * (err + std::abs(sum) * l.error(0)) +
                          4.0 * k * kEps * base * magnitude;
  }
  return out;
}

double exp_bound_constant(std::span<const double> c, int n) {
  if (n < 1 || static_cast<std::size_t>(n) > c.size()) {
    throw ArgumentError("exp_bound_constant: need C_1..C_N");
  }
  double total = 0.0;
  for (const auto& group : block_signatures(n)) {
    double prod = 1.0;
    for (int s : group.sizes) prod *= c[static_cast<std::size_t>(s) - 1];
    total += static_cast<double>(group.count) * prod;
  }
  return total;
}

Jet measure_change_jet(const Jet& p, const Jet& density, Measure target) {
  if (density.values.empty() || !(density[0] > 0.0)) {
    throw DomainError("measure_change_jet: density must be strictly positive");
  }
  if (density.order() < p.order()) {
    throw ArgumentError("measure_change_jet: density jet order too low");
  }
  Jet out = jet_product(p, density.truncated(p.order()));
  out.center = p.center;
  out.measure = target;
  return out;
}

Jet measure_change_x_jet(const Jet& p, double density_at_y, Measure target) {
  if (!(density_at_y > 0.0)) {
    throw DomainError("measure_change_x_jet: density must be strictly positive");
  }
  Jet out = jet_scaled(p, density_at_y);
  out.measure = target;
  return out;
}

Jet covariant_jet(const Jet& partial, const Jet& christoffel, int n) {
  if (n < 1) throw ArgumentError("covariant_jet: order must be >= 1");
  if (partial.order() < n) {
    throw ArgumentError("covariant_jet: partial jet order " +
                        std::to_string(partial.order()) + " < " + std::to_string(n));
  }
  if (n >= 2 && christoffel.order() < n - 2) {
    throw ArgumentError("covariant_jet: Christoffel jet order too low");
  }
  Jet out = Jet::constant(partial[0], n);
  out.center = partial.center;
  out.measure = partial.measure;
  out.error_bounds[0] = partial.error(0);

  // T_1 = df as a jet of order n-1; T_{k+1} = D T_k - k Gamma T_k.
  Jet current = jet_derivative(partial.truncated(n));
  out.values[1] = current[0];
  out.error_bounds[1] = current.error(0);
  for (int k = 1; k < n; ++k) {
    const int next_order = n - k - 1;
    Jet derivative = jet_derivative(current);
    Jet correction =
        jet_scaled(jet_product(christoffel.truncated(next_order), current.truncated(next_order)),
                   -static_cast<double>(k));
    current = jet_sum(derivative.truncated(next_order), correction);
    out.values[k + 1] = current[0];
    out.error_bounds[k + 1] = current.error(0);
  }
  return out;
}

Rational to_rational(double v) {
  if (!std::isfinite(v)) throw DomainError("to_rational: non-finite value");
  if (v == 0.0) return Rational(0);
  int exponent = 0;
  const double mantissa = std::frexp(v, &exponent);  // v = mantissa * 2^exponent
  const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  exponent -= 53;
  Rational r(scaled);
  boost::multiprecision::cpp_int pow2 = 1;
  pow2 <<= std::abs(exponent);
  if (exponent >= 0) return r * Rational(pow2);
  return r / Rational(pow2);
}

bool is_small_dyadic(double v) {
  if (!std::isfinite(v)) return false;
  const Rational r = to_rational(v);
  const auto den = boost::multiprecision::denominator(r);
  return msb(den) <= 64;
}

CumulantResult joint_cumulant(const MidpointMeasure& measure, int n) {
  if (n < 1) throw ArgumentError("joint_cumulant: order must be >= 1");
  if (measure.atoms.empty()) throw ArgumentError("joint_cumulant: empty measure");
  for (const auto& atom : measure.atoms) {
    if (atom.variables.empty()) {
      throw ArgumentError("joint_cumulant: atoms must carry the order-1 variable");
    }
  }

  bool exact_ok = true;
  for (const auto& atom : measure.atoms) {
    exact_ok = exact_ok && is_small_dyadic(atom.weight) && is_small_dyadic(atom.variables[0]);
  }

  // Moments E[X^s], s = 0..n.
  std::vector<double> moments(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Rational> exact_moments;
  for (const auto& atom : measure.atoms) {
    double power = 1.0;
    for (int s = 0; s <= n; ++s) {
      moments[s] += atom.weight * power;
      power *= atom.variables[0];
    }
  }
  if (exact_ok) {
    exact_moments.assign(static_cast<std::size_t>(n) + 1, Rational(0));
    for (const auto& atom : measure.atoms) {
      const Rational w = to_rational(atom.weight);
      const Rational x = to_rational(atom.variables[0]);
      Rational power = 1;
      for (int s = 0; s <= n; ++s) {
        exact_moments[s] += w * power;
        power *= x;
      }
    }
  }

  CumulantResult result;
  result.order = n;
  Rational exact_sum = 0;
  for (const auto& group : block_signatures(n)) {
    const int m = static_cast<int>(group.sizes.size());
    const double sign = (m % 2 == 1) ? 1.0 : -1.0;
    const double coeff = static_cast<double>(group.count) * sign * factorial(m - 1);
    double prod = 1.0;
    for (int s : group.sizes) prod *= moments[s];
    result.value += coeff * prod;
    result.blocks_used += static_cast<std::size_t>(group.count) * static_cast<std::size_t>(m);
    if (exact_ok) {
      Rational exact_prod = 1;
      for (int s : group.sizes) exact_prod *= exact_moments[s];
      Rational c = Rational(static_cast<long long>(group.count)) *
                   Rational(static_cast<long long>(factorial(m - 1)));
      const Rational term = c * exact_prod;
      if (m % 2 == 1) {
        exact_sum += term;
      } else {
        exact_sum -= term;
      }
    }
  }
  if (exact_ok) {
    result.exact = exact_sum;
    result.value = static_cast<double>(exact_sum);
  }
  return result;
}

double joint_cumulant(std::span<const double> weights,
                      const std::vector<std::vector<double>>& slot_values) {
  const int n = static_cast<int>(slot_values.size());
  if (n < 1) throw ArgumentError("joint_cumulant: order must be >= 1");
  for (const auto& slot : slot_values) {
    if (slot.size() != weights.size()) {
      throw ArgumentError("joint_cumulant: slot/atom size mismatch");
    }
  }
  const auto& family = set_partitions(n);
  double total = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const int m = family.block_count(i);
    double prod = 1.0;
    for (const auto& block : family.blocks(i)) {
      double moment = 0.0;
      for (std::size_t a = 0; a < weights.size(); ++a) {
        double v = weights[a];
        for (int idx : block) v *= slot_values[static_cast<std::size_t>(idx) - 1][a];
        moment += v;
      }
      prod *= moment;
    }
    total += ((m % 2 == 1) ? 1.0 : -1.0) * factorial(m - 1) * prod;
  }
  return total;
}

}  // namespace heatlab
