#include "heatlab/jet.hpp"

#include <algorithm>
#include <cmath>

#include "heatlab/error.hpp"

namespace heatlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Unsupported: return "unsupported-configuration";
    case ErrorKind::Numerical: return "numerical-failure";
    case ErrorKind::Precision: return "precision";
    case ErrorKind::CutLocus: return "cut-locus";
    case ErrorKind::DegeneratePair: return "degenerate-pair";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::Statistics: return "statistics";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

const char* to_string(Measure m) {
  switch (m) {
    case Measure::Riemannian: return "riemannian";
    case Measure::Symmetrizing: return "symmetrizing";
    case Measure::Custom: return "custom";
  }
  return "unknown";
}

Jet::Jet(std::vector<double> vals, std::vector<double> errs)
    : values(std::move(vals)), error_bounds(std::move(errs)) {
  error_bounds.resize(values.size(), 0.0);
}

Jet Jet::constant(double v, int order) {
  std::vector<double> vals(static_cast<std::size_t>(order) + 1, 0.0);
  vals[0] = v;
  return Jet(std::move(vals));
}

Jet Jet::truncated(int order) const {
  Jet out = *this;
  out.values.resize(static_cast<std::size_t>(order) + 1, 0.0);
  out.error_bounds.resize(static_cast<std::size_t>(order) + 1, 0.0);
  return out;
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

Jet jet_product(const Jet& a, const Jet& b) {
  const int n = std::min(a.order(), b.order());
  if (n < 0) throw ArgumentError("jet_product: empty jet");
  Jet out;
  out.center = a.center;
  out.measure = a.measure;
  out.values.assign(n + 1, 0.0);
  out.error_bounds.assign(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double v = 0.0;
    double e = 0.0;
    for (int j = 0; j <= k; ++j) {
      const double c = binomial(k, j);
      v += c * a[j] * b[k - j];
      e += c * (std::abs(a.error(j)) * std::abs(b[k - j]) +
                std::abs(a[j]) * std::abs(b.error(k - j)) +
                a.error(j) * b.error(k - j));
    }
    out.values[k] = v;
    out.error_bounds[k] = e;
  }
  return out;
}

Jet jet_derivative(const Jet& a) {
  if (a.order() < 1) throw ArgumentError("jet_derivative: order must be >= 1");
  Jet out;
  out.center = a.center;
  out.measure = a.measure;
  out.values.assign(a.values.begin() + 1, a.values.end());
  out.error_bounds.assign(a.error_bounds.begin() + 1, a.error_bounds.end());
  return out;
}

Jet jet_scaled(const Jet& a, double s) {
  Jet out = a;
  for (auto& v : out.values) v *= s;
  for (auto& e : out.error_bounds) e *= std::abs(s);
  return out;
}

Jet jet_sum(const Jet& a, const Jet& b) {
  const int n = std::min(a.order(), b.order());
  Jet out = a.truncated(n);
  for (int k = 0; k <= n; ++k) {
    out.values[k] += b[k];
    out.error_bounds[k] += b.error(k);
  }
  return out;
}

}  // namespace heatlab
