#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "heatlab/calculus.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/manifold.hpp"

namespace heatlab {

using PointPair = std::pair<double, double>;

struct GridPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  int order = 0;
};

struct PointResult {
  std::string tag;
  GridPoint point;
  double statistic = 0.0;
  std::optional<double> bound;
  bool pass = true;
  /// Propagated kernel error on the statistic.
  double error = 0.0;
  bool precision_flag = false;
};

struct VerificationReport {
  std::string theorem;
  std::string manifold;
  std::string backend;
  std::vector<double> t_grid;
  std::vector<PointPair> k_set;
  int order = 0;
  std::vector<PointResult> points;
  std::map<std::string, double> fitted;
  double tolerance = 0.0;
  double max_kernel_error = 0.0;
  std::vector<std::string> notes;
  bool pass = false;
};

/// Geometric grid of `count` times from t_min to t_max, ascending.
std::vector<double> geometric_grid(double t_min, double t_max, int count);

/// Compact-closure test of {z : d(x,z) + d(z,y) < d(x,y) + eps} per pair.
std::vector<bool> check_K_condition(const Manifold1D& m, const std::vector<PointPair>& k,
                                    double eps);

/// epsilon of the compact-closure condition used by the bound scans.
inline constexpr double kKConditionEpsilon = 0.05;

/// Unit-frame covariant x-jet of log p_t(., y), orders 0..n.
Jet unit_frame_log_jet(const Kernel& kernel, double t, double x, double y, int n);

/// Relative threshold for the precision flag: error > 0.1 max(|value|, floor).
inline constexpr double kPrecisionFraction = 0.1;
/// Half-grid sup must match the full-grid sup to this fraction.
inline constexpr double kRefinementStability = 0.05;

struct ScanOptions {
  int threads = 0;
  /// Multiplies every automatic series cutoff.
  double series_scale = 1.0;
};

/// sup over K x t_grid of |nabla^N log p| / (d/t + 1/sqrt t)^N.
VerificationReport main_bound_scan(const Kernel& kernel, const std::vector<PointPair>& k, int n,
                                   const std::vector<double>& t_grid,
                                   const ScanOptions& options = {});

/// Near (d <= c) and far (d > c) regime constants.
VerificationReport regime_scan(const Kernel& kernel, const std::vector<PointPair>& k, int n,
                               const std::vector<double>& t_grid, double c,
                               const ScanOptions& options = {});

/// rho(t) = -4t nabla^N log p - nabla^N d^2 fitted by c1 t + c2 t^2.
VerificationReport noncut_check(const Kernel& kernel, double x, double y, int n,
                                const std::vector<double>& t_grid,
                                const ScanOptions& options = {});

/// Minimum d(y, Cut(x)) / L accepted by the off-cut-locus checks on circles.
inline constexpr double kCutBufferFraction = 0.05;

struct CumulantLeading {
  double value = 0.0;
  std::optional<Rational> exact;
  CumulantResult cumulant;
  double distance = 0.0;
};

/// (-d/2)^N kappa^{m0}(X, ..., X).
CumulantLeading cumulant_leading(const Manifold1D& m, double x, double y, int n);

/// t^N nabla^N log p against cumulant_leading, linearly extrapolated to t = 0
/// from the two smallest grid times.
VerificationReport cumulant_vs_kernel(const Kernel& kernel, double x, double y, int n,
                                      const std::vector<double>& t_grid,
                                      double tolerance = 1e-4,
                                      const ScanOptions& options = {});

/// Relative tolerance of the two-term antipodal Hessian form.
inline constexpr double kAntipodalHessianTolerance = 1e-6;

/// v(t) = 4t log |d_y^k p_t| + d^2 against the envelope c1 t log(1/t) + c2 t.
VerificationReport varadhan_limit_check(const Kernel& kernel, double x, double y,
                                        const std::vector<double>& t_grid,
                                        double tolerance = 1e-3, int derivative_order = 0,
                                        const ScanOptions& options = {});

struct BenArousEstimate {
  std::vector<double> t;
  std::vector<double> c_hat;
  double c0 = 0.0;
  double slope = 0.0;
  int dimension = 1;
};

/// c_hat(t) = t^{n/2} e^{d^2/4t} p_t(x, y), extrapolated to t = 0.
BenArousEstimate benarous_c0(const Kernel& kernel, double x, double y,
                             const std::vector<double>& t_grid);

/// Linear extrapolation to t = 0 from (t1, v1), (t2, v2).
double extrapolate_to_zero(double t1, double v1, double t2, double v2);

}  // namespace heatlab
