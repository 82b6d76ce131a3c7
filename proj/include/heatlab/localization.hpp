#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heatlab/images.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/manifold.hpp"

namespace heatlab {

/// Killed-to-full ratio above which through-kernels switch to the cancelled
/// image sum instead of subtracting logs.
inline constexpr double kThroughCancellationRatio = 1.0 - 1e-9;

/// Dirichlet kernel of the open set U (drift-free models). U may be
/// half-infinite on line variants; arcs on circles run from lo to hi.
Jet killed_kernel(const Manifold1D& m, const OpenArc& u, double t, double x, double y, int n,
                  IntervalBackend backend = IntervalBackend::Auto);

struct ThroughKernelValue {
  double value = 0.0;
  double full = 0.0;
  double killed = 0.0;
  double error_bound = 0.0;
  /// log of value, finite even when value underflows.
  double log_value = 0.0;
  double log_full = 0.0;
  /// True when the cancelled image sum was used.
  bool cancelled = false;
};

/// p_t(x, A, y) = p_t(x, y) - p^{A^c}_t(x, y).
ThroughKernelValue through_kernel(const Manifold1D& m, const ClosedSet& a, double t, double x,
                                  double y);

/// Component of the complement of A containing x (empty when x lies in A).
std::optional<OpenArc> complement_component(const Manifold1D& m, const ClosedSet& a, double x);

/// First-passage law of the drift-free diffusion from x out of (a, b).
struct FirstPassageLaw {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> tau;
  std::vector<double> density_lower;
  std::vector<double> density_upper;
  /// Probability of exit through each endpoint by the last grid time.
  double mass_lower = 0.0;
  double mass_upper = 0.0;
  double total_mass() const { return mass_lower + mass_upper; }
};

FirstPassageLaw first_passage_law(const Manifold1D& m, double x, const OpenArc& u,
                                  const std::vector<double>& tau_grid);

/// Hitting density and cumulative probability for exit through the boundary
/// at offset `gap` from x, on an interval of length ell.
double first_passage_density(double ell, double gap, double tau);
double first_passage_cumulative(double ell, double gap, double t);
/// P(no exit from an interval of length ell by time t), started at offset gap.
double survival_probability(double ell, double gap, double t);

struct DecompositionResult {
  double killed = 0.0;
  double full = 0.0;
  double hitting_integral = 0.0;
  double residual = 0.0;
  double quadrature_error = 0.0;
};

/// |p^U_t(x, y) - (p_t(x, y) - int p_{t - tau}(z, y) d mu_h(z, tau))|.
DecompositionResult verify_decomposition(const Manifold1D& m, const OpenArc& u, double t, double x,
                                         double y);

struct ExitOptions {
  std::size_t paths = 100000;
  /// 0 selects T / 1000.
  double dt = 0.0;
  std::uint64_t seed = 1;
  bool bridge_correction = true;
  int threads = 0;
};

struct ExitProbability {
  double value = 0.0;
  double standard_error = 0.0;
  /// Closed form (true) or Monte Carlo (false).
  bool exact = true;
  std::string method;
};

/// P(sigma_a < T | X_0 = x) for the ball of radius a around x.
ExitProbability exit_probability(const Manifold1D& m, double x, double a, double horizon,
                                 const ExitOptions& options = {});

/// Standard errors added to Monte Carlo exit estimates before comparing with 1/2.
inline constexpr double kExitSigma = 3.0;

struct ExitHorizon {
  /// Largest horizon found with P(sigma_a < T) + 3 SE < 1/2 at every start.
  double horizon = 0.0;
  bool found = false;
  std::vector<double> starts;
  /// P + 3 SE per start at the reported horizon.
  std::vector<double> upper;
  int evaluations = 0;
};

/// Halves T from t_max until every start passes, then bisects towards the
/// first failing horizon for `refinements` steps.
ExitHorizon exit_horizon(const Manifold1D& m, const std::vector<double>& starts, double a,
                         double t_max, const ExitOptions& options = {}, int refinements = 4);

struct RateReport {
  std::vector<double> t;
  std::vector<double> rate;      // 4t log p_t(x, A, y) + d(x, A, y)^2
  std::vector<double> envelope;  // c1 t log(1/t) + c2 t
  std::vector<double> residual;  // rate - envelope
  double distance_via = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double tolerance = 1e-3;
  /// Grid points dropped because the through-kernel underflowed.
  std::size_t truncated = 0;
  /// Number of grid points with t <= sqrt(t_min t_max) used by the fit.
  std::size_t tail_size = 0;
  bool pass = false;
};

/// Weighted least squares of r(t) on {t log(1/t), t} with weights 1/t over the
/// small-time tail; passes when r(t) - envelope(t) <= tolerance on the tail and
/// |residual| <= tolerance at the smallest t.
RateReport rate_through(const Manifold1D& m, const ClosedSet& a, double x, double y,
                        const std::vector<double>& t_grid, double tolerance = 1e-3);

/// Indices of the grid times t <= sqrt(t_min t_max) (at least three),
/// ascending in t.
std::vector<std::size_t> small_time_tail(const std::vector<double>& t);

/// Two-parameter weighted least squares fit y ~ c1 f1 + c2 f2.
struct Fit2 {
  double c1 = 0.0;
  double c2 = 0.0;
};
Fit2 weighted_fit(const std::vector<double>& f1, const std::vector<double>& f2,
                  const std::vector<double>& y, const std::vector<double>& w);

}  // namespace heatlab
