#pragma once

#include <span>
#include <vector>

#include "heatlab/jet.hpp"

namespace heatlab {

/// Lattice of Gaussian images: sum_j weight * g_t(y - (base + j * period)),
/// where g_t(s) = (4 pi t)^{-1/2} exp(-s^2 / 4t). A zero period is a single term.
struct ImageFamily {
  double weight = 1.0;
  double base = 0.0;
  double period = 0.0;
};

struct ImageTerm {
  double weight = 0.0;
  double center = 0.0;
};

struct SeriesTruncation {
  /// Number of terms kept.
  int cutoff = 0;
  /// Bound on the omitted tail, per derivative order.
  std::vector<double> tail_bound;
};

struct SeriesJet {
  Jet jet;
  SeriesTruncation truncation;
};

/// Terms of the families with |y - center| <= radius.
std::vector<ImageTerm> enumerate_images(std::span<const ImageFamily> families, double y,
                                        double radius);

/// Merges terms whose centers agree to `tol` and drops those that cancel.
std::vector<ImageTerm> cancel_images(std::vector<ImageTerm> terms, double tol);

/// Truncation radius keeping every term whose exponent lies within `margin`
/// of the dominant surviving term, after cancellation.
double auto_image_radius(std::span<const ImageFamily> families, double t, double y, int order);

/// y-jet of the image sum. radius <= 0 selects it automatically.
SeriesJet image_sum_jet(std::span<const ImageFamily> families, double t, double y, int order,
                        double radius = 0.0);

struct LogValue {
  double log_value = 0.0;
  /// Bound on the absolute error of log_value.
  double log_error = 0.0;
  int terms = 0;
};

/// log of the order-0 image sum via log-sum-exp, with exact cancellation of
/// coincident images. Throws NumericalFailure when the sum is not positive.
LogValue image_sum_log(std::span<const ImageFamily> families, double t, double y,
                       double radius = 0.0);

/// Jet of log of the image sum. Stays finite when the sum itself underflows.
Jet image_sum_log_jet(std::span<const ImageFamily> families, double t, double y, int order,
                      double radius = 0.0);

/// Physicists' Hermite polynomial H_k(z).
double hermite(int k, double z);

/// Sum of absolute coefficients of H_k.
double hermite_abs_coeff_sum(int k);

/// Derivatives of orders 0..n of the Gaussian density with the given mean and
/// variance, w.r.t. the evaluation point.
Jet gaussian_density_jet(double mean, double variance, double y, int n);

}  // namespace heatlab
