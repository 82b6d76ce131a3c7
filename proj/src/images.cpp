#include "heatlab/images.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"

namespace heatlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxHermite = 24;
constexpr double kBaseMargin = 40.0;

struct HermiteTable {
  std::array<double, kMaxHermite + 1> abs_sum{};
  HermiteTable() {
    std::vector<double> prev{1.0};
    std::vector<double> cur{0.0, 2.0};
    abs_sum[0] = 1.0;
    abs_sum[1] = 2.0;
    for (int k = 1; k < kMaxHermite; ++k) {
      std::vector<double> next(cur.size() + 1, 0.0);
      for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += 2.0 * cur[i];
      for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= 2.0 * k * prev[i];
      double s = 0.0;
      for (double c : next) s += std::abs(c);
      abs_sum[k + 1] = s;
      prev = std::move(cur);
      cur = std::move(next);
    }
  }
};

const HermiteTable& hermite_table() {
  static const HermiteTable table;
  return table;
}

void check_order(int order) {
  if (order < 0 || order > kMaxHermite) {
    throw ArgumentError("image sum: derivative order must lie in [0, " +
                        std::to_string(kMaxHermite) + "]");
  }
}

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("heat kernel: t must be > 0");
}

// Nearest |y - c| over one family.
double nearest_offset(const ImageFamily& f, double y) {
  if (f.period <= 0.0) return std::abs(y - f.base);
  return std::abs(std::remainder(y - f.base, f.period));
}

double merge_tolerance(double c) { return 1e-12 * (1.0 + std::abs(c)); }

// Upper bound on the k-th derivative magnitude of a unit-weight image at
// scaled offset z, without the (4 pi t)^{-1/2} (4t)^{-k/2} prefactor.
double term_envelope(int k, double z) {
  return hermite_table().abs_sum[k] * std::pow(std::max(1.0, z), k) * std::exp(-z * z);
}

// Omitted terms of one side of a periodic family, starting at offset s1 >= 0.
double side_tail(int k, double s1, double period, double sqrt4t) {
  const double shift = period / sqrt4t;
  double z = s1 / sqrt4t;
  double sum = 0.0;
  const double zc = std::sqrt(k / 2.0) + 1.0;
  for (int guard = 0; z < zc && guard < 100000; ++guard) {
    sum += term_envelope(k, z);
    z += shift;
  }
  const double first = term_envelope(k, z);
  if (first == 0.0) return sum;
  const double next = term_envelope(k, z + shift);
  const double ratio = next / first;
  if (!(ratio < 1.0)) return std::numeric_limits<double>::infinity();
  return sum + first / (1.0 - ratio);
}

std::vector<double> tail_bounds(std::span<const ImageFamily> families, double t, double y,
                                double radius, int order) {
  std::vector<double> tails(static_cast<std::size_t>(order) + 1, 0.0);
  const double sqrt4t = std::sqrt(4.0 * t);
  const double pref = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
  for (const auto& f : families) {
    if (f.period <= 0.0 || f.weight == 0.0) continue;
    // First omitted center on each side.
    const double jr = std::floor((y + radius - f.base) / f.period) + 1.0;
    const double jl = std::ceil((y - radius - f.base) / f.period) - 1.0;
    const double sr = f.base + jr * f.period - y;
    const double sl = y - (f.base + jl * f.period);
    for (int k = 0; k <= order; ++k) {
      const double scale = pref * std::pow(sqrt4t, -k) * std::abs(f.weight);
      tails[k] += scale * (side_tail(k, std::max(sr, 0.0), f.period, sqrt4t) +
                           side_tail(k, std::max(sl, 0.0), f.period, sqrt4t));
    }
  }
  return tails;
}

struct ScaledSum {
  // values are the true derivatives times exp(shift)
  std::vector<double> values;
  std::vector<double> errors;
  double shift = 0.0;
  int terms = 0;
  double radius = 0.0;
};

double dominant_offset(const std::vector<ImageTerm>& terms, double y) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& term : terms) best = std::min(best, std::abs(y - term.center));
  return best;
}

ScaledSum scaled_sum(std::span<const ImageFamily> families, double t, double y, int order,
                     double radius) {
  check_time(t);
  check_order(order);
  if (families.empty()) throw ArgumentError("image sum: no image families");
  if (radius <= 0.0) radius = auto_image_radius(families, t, y, order);
  auto terms = cancel_images(enumerate_images(families, y, radius), 0.0);

  const double sqrt4t = std::sqrt(4.0 * t);
  const double pref = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
  ScaledSum out;
  out.values.assign(static_cast<std::size_t>(order) + 1, 0.0);
  out.errors.assign(static_cast<std::size_t>(order) + 1, 0.0);
  out.terms = static_cast<int>(terms.size());
  out.radius = radius;
  if (terms.empty()) {
    out.shift = 0.0;
  } else {
    const double zmin = dominant_offset(terms, y) / sqrt4t;
    out.shift = zmin * zmin;
  }
  std::vector<double> magnitude(out.values.size(), 0.0);
  std::vector<double> h(out.values.size(), 0.0);
  for (const auto& term : terms) {
    const double s = y - term.center;
    const double z = s / sqrt4t;
    const double g = term.weight * std::exp(out.shift - z * z);
    h[0] = 1.0;
    if (order >= 1) h[1] = 2.0 * z;
    for (int k = 1; k < order; ++k) h[k + 1] = 2.0 * z * h[k] - 2.0 * k * h[k - 1];
    double scale = 1.0;
    for (int k = 0; k <= order; ++k) {
      const double v = ((k % 2 == 0) ? 1.0 : -1.0) * scale * h[k] * g;
      out.values[k] += v;
      magnitude[k] += std::abs(v);
      scale /= sqrt4t;
    }
  }
  for (int k = 0; k <= order; ++k) {
    out.values[k] *= pref;
    magnitude[k] *= pref;
    out.errors[k] = (static_cast<double>(out.terms) + k + 4.0) * kEps * magnitude[k];
  }
  return out;
}

}  // namespace

double hermite(int k, double z) {
  if (k < 0) throw ArgumentError("hermite: negative order");
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = 2.0 * z;
  for (int i = 1; i < k; ++i) {
    const double next = 2.0 * z * cur - 2.0 * i * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double hermite_abs_coeff_sum(int k) {
  check_order(k);
  return hermite_table().abs_sum[k];
}

std::vector<ImageTerm> enumerate_images(std::span<const ImageFamily> families, double y,
                                        double radius) {
  std::vector<ImageTerm> out;
  for (const auto& f : families) {
    if (f.weight == 0.0) continue;
    if (f.period <= 0.0) {
      if (std::abs(y - f.base) <= radius) out.push_back({f.weight, f.base});
      continue;
    }
    const auto lo = static_cast<long long>(std::ceil((y - radius - f.base) / f.period));
    const auto hi = static_cast<long long>(std::floor((y + radius - f.base) / f.period));
    if (hi - lo > 10'000'000) throw NumericalFailure("image sum: too many images");
    for (long long j = lo; j <= hi; ++j) {
      out.push_back({f.weight, f.base + static_cast<double>(j) * f.period});
    }
  }
  return out;
}

std::vector<ImageTerm> cancel_images(std::vector<ImageTerm> terms, double tol) {
  std::sort(terms.begin(), terms.end(),
            [](const ImageTerm& a, const ImageTerm& b) { return a.center < b.center; });
  std::vector<ImageTerm> out;
  for (const auto& term : terms) {
    const double limit = tol > 0.0 ? tol : merge_tolerance(term.center);
    if (!out.empty() && std::abs(out.back().center - term.center) <= limit) {
      out.back().weight += term.weight;
    } else {
      out.push_back(term);
    }
  }
  std::erase_if(out, [](const ImageTerm& t) { return std::abs(t.weight) < 1e-14; });
  return out;
}

double auto_image_radius(std::span<const ImageFamily> families, double t, double y, int order) {
  check_time(t);
  check_order(order);
  double nearest = std::numeric_limits<double>::infinity();
  double widest = 0.0;
  for (const auto& f : families) {
    nearest = std::min(nearest, nearest_offset(f, y));
    widest = std::max(widest, f.period);
  }
  const double margin = kBaseMargin + 3.0 * order;
  double radius = std::sqrt(nearest * nearest + 4.0 * t * margin);
  // Cancellation can remove the nearest images; widen until the dominant
  // surviving term is covered with the full margin.
  for (int iter = 0; iter < 8; ++iter) {
    auto terms = cancel_images(enumerate_images(families, y, radius), 0.0);
    if (terms.empty()) {
      radius = radius * 2.0 + widest;
      continue;
    }
    const double dom = dominant_offset(terms, y);
    const double needed = std::sqrt(dom * dom + 4.0 * t * margin);
    if (needed <= radius * (1.0 + 1e-12)) break;
    radius = needed;
  }
  return radius;
}

SeriesJet image_sum_jet(std::span<const ImageFamily> families, double t, double y, int order,
                        double radius) {
  const ScaledSum s = scaled_sum(families, t, y, order, radius);
  const double factor = std::exp(-s.shift);
  SeriesJet out;
  out.truncation.cutoff = s.terms;
  out.truncation.tail_bound = tail_bounds(families, t, y, s.radius, order);
  out.jet.values.resize(s.values.size());
  out.jet.error_bounds.resize(s.values.size());
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    out.jet.values[k] = s.values[k] * factor;
    out.jet.error_bounds[k] = s.errors[k] * factor + out.truncation.tail_bound[k];
  }
  return out;
}

Jet image_sum_log_jet(std::span<const ImageFamily> families, double t, double y, int order,
                      double radius) {
  const ScaledSum s = scaled_sum(families, t, y, order, radius);
  const auto tails = tail_bounds(families, t, y, s.radius, order);
  Jet scaled(s.values, s.errors);
  const double back = std::exp(s.shift);
  for (int k = 0; k <= order; ++k) {
    const double tail = tails[k] * back;
    if (std::isfinite(tail)) scaled.error_bounds[k] += tail;
  }
  if (!(scaled[0] > 0.0)) {
    throw NumericalFailure("image sum: non-positive kernel value in log space");
  }
  Jet out = log_jet(scaled);
  out.values[0] -= s.shift;
  return out;
}

LogValue image_sum_log(std::span<const ImageFamily> families, double t, double y,
                       double radius) {
  const ScaledSum s = scaled_sum(families, t, y, 0, radius);
  if (!(s.values[0] > 0.0)) {
    throw NumericalFailure("image sum: non-positive kernel value in log space");
  }
  LogValue out;
  out.log_value = std::log(s.values[0]) - s.shift;
  // The tail is relative to the dominant term, far below exp(-shift).
  const auto tails = tail_bounds(families, t, y, s.radius, 0);
  const double rel_tail = tails[0] * std::exp(s.shift) / s.values[0];
  out.log_error = s.errors[0] / s.values[0] + (std::isfinite(rel_tail) ? rel_tail : 0.0) +
                  kEps * std::abs(out.log_value);
  out.terms = s.terms;
  return out;
}

Jet gaussian_density_jet(double mean, double variance, double y, int n) {
  if (!(variance > 0.0)) throw ArgumentError("gaussian density: variance must be > 0");
  check_order(n);
  const double w = std::sqrt(2.0 * variance);
  const double z = (y - mean) / w;
  const double base = std::exp(-z * z) / std::sqrt(2.0 * std::numbers::pi * variance);
  Jet out;
  out.values.resize(static_cast<std::size_t>(n) + 1);
  out.error_bounds.resize(static_cast<std::size_t>(n) + 1);
  double scale = 1.0;
  for (int k = 0; k <= n; ++k) {
    const double v = ((k % 2 == 0) ? 1.0 : -1.0) * scale * hermite(k, z) * base;
    out.values[k] = v;
    out.error_bounds[k] = (4.0 + 2.0 * k) * kEps *
                          (scale * base * hermite_table().abs_sum[k] *
                           std::pow(std::max(1.0, std::abs(z)), k));
    scale /= w;
  }
  return out;
}

}  // namespace heatlab
