#pragma once

#include <memory>
#include <string>
#include <vector>

#include "heatlab/images.hpp"
#include "heatlab/jet.hpp"
#include "heatlab/manifold.hpp"

namespace heatlab {

enum class KernelId { Theta, Gauss, Interval, Mehler, H3, Spectral };

const char* to_string(KernelId id);
KernelId parse_kernel_id(const std::string& name);
/// Closed-form backend for the manifold, or spectral for drifted circles.
KernelId default_kernel(const Manifold1D& m);

// All kernels are densities against the Riemannian volume mu unless the
// measure argument says otherwise. Jets are in the y-variable.

SeriesJet theta_series(const Manifold1D& circle, double t, double x, double y, int n,
                       double radius = 0.0);
Jet theta_kernel_jet(const Manifold1D& circle, double t, double x, double y, int n);

Jet gauss_kernel_jet(const Manifold1D& line, double t, double x, double y, int n);

enum class IntervalBackend { Auto, Eigen, Images };

/// Crossover for IntervalBackend::Auto: images for t <= (b - a)^2 / 8.
inline constexpr double kIntervalImageThreshold = 0.125;

/// `cutoff` is the eigenmode count (Eigen) or the image radius in units of
/// the period 2(b - a) (Images); 0 selects it automatically.
SeriesJet interval_series(const Manifold1D& interval, double t, double x, double y, int n,
                          IntervalBackend backend, double cutoff = 0.0);
Jet interval_kernel_jet(const Manifold1D& interval, double t, double x, double y, int n,
                        IntervalBackend backend = IntervalBackend::Auto);
/// Image families of the Dirichlet kernel of (a, b) started at x.
std::vector<ImageFamily> interval_images(double a, double b, double x);

/// Mean and variance of the linear diffusion for a quadratic potential.
struct LinearDiffusion {
  double mean = 0.0;
  double variance = 0.0;
};
LinearDiffusion weighted_line_law(const Manifold1D& m, double t, double x);
Jet weighted_line_kernel_jet(const Manifold1D& m, double t, double x, double y, int n);

/// Radial jet in r of the 3-dimensional hyperbolic kernel.
Jet hyperbolic3_radial_jet(const Manifold1D& m, double t, double r, int n);
/// Log-jet in r, evaluated without forming the kernel itself.
Jet hyperbolic3_radial_log_jet(const Manifold1D& m, double t, double r, int n);

struct SpectralOptions {
  int grid_size = 2048;
  /// Fourier modes kept on each side; 0 selects from t.
  int modes = 0;
  Measure measure = Measure::Riemannian;
  /// Estimate the error by comparison against the 2n grid.
  bool refine = true;
};

Jet spectral_kernel_jet(const Manifold1D& m, int grid_size, double t, double x, double y, int n,
                        Measure measure = Measure::Riemannian);
Jet spectral_kernel_jet(const Manifold1D& m, double t, double x, double y, int n,
                        const SpectralOptions& options);
/// Drops every cached eigenbasis.
void clear_spectral_cache();
std::size_t spectral_cache_size();

/// A kernel backend bound to a manifold.
class Kernel {
 public:
  Kernel(Manifold1D m, KernelId id, int grid_size = 2048);
  static Kernel for_manifold(const Manifold1D& m, int grid_size = 2048);

  /// Copy whose automatic series cutoffs (image radius, mode count) are
  /// multiplied by `scale`.
  Kernel with_series_scale(double scale) const;
  double series_scale() const { return series_scale_; }

  const Manifold1D& manifold() const { return m_; }
  KernelId id() const { return id_; }
  int grid_size() const { return grid_size_; }
  std::string describe() const;

  /// y-jet of p_t(x, .) against mu. For h3 the arguments are radii and the
  /// jet is in r = |y - x|.
  Jet y_jet(double t, double x, double y, int n) const;
  double value(double t, double x, double y) const;
  /// log p_t(x, y), in log space where the backend allows it.
  double log_value(double t, double x, double y) const;
  /// y-jet of log p_t(x, .).
  Jet y_log_jet(double t, double x, double y, int n) const;
  /// x-jet of log p_t(., y), via the symmetry of p^nu and a measure change.
  Jet x_log_jet(double t, double x, double y, int n) const;

 private:
  Manifold1D m_;
  KernelId id_;
  int grid_size_;
  double series_scale_ = 1.0;
};

struct Residual {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Heat-equation residual d_t p - Delta_x p at (t, x, y) from Ridders-
/// extrapolated central differences.
Residual pde_residual(const Kernel& kernel, double t, double x, double y);
Residual pde_residual(const Manifold1D& m, KernelId id, double t, double x, double y);

struct Derivative {
  double value = 0.0;
  double error = 0.0;
};

/// Ridders' extrapolated central difference of order 1 or 2.
template <class F>
Derivative ridders(F&& f, double x, double h0, int order);

}  // namespace heatlab

#include "heatlab/ridders.inl"
