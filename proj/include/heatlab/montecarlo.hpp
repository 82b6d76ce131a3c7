#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "heatlab/kernels.hpp"
#include "heatlab/manifold.hpp"

namespace heatlab {

/// Philox4x32-10 counter-based generator.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter ctr, Key key);
};

/// Uniform double in (0, 1) from two 32-bit words.
double uniform_open(std::uint32_t hi, std::uint32_t lo);

struct SimulationConfig {
  Manifold1D manifold = Manifold1D::line();
  double x = 0.0;
  double t = 1.0;
  double dt = 0.01;
  std::size_t paths = 1000;
  std::uint64_t seed = 0;
  /// Brownian-bridge crossing correction for killing and exit detection.
  bool bridge_correction = false;
  /// Worker cap; 0 uses thread_count().
  int threads = 0;
};

/// Throws ArgumentError unless dt > 0, dt <= t/100, paths >= 1000 and x lies
/// in the domain.
void validate(const SimulationConfig& cfg);

struct EndpointSample {
  /// X_t per path; NaN for absorbed paths.
  std::vector<double> endpoints;
  std::vector<std::uint8_t> absorbed;
  std::size_t absorbed_count = 0;
};

/// Euler-Maruyama for dX = Z(X) ds + sqrt(2) dW, wrapped on circles and killed
/// on leaving a Dirichlet interval.
EndpointSample simulate_endpoints(const SimulationConfig& cfg);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t paths = 0;
};

/// Probability of leaving the ball of radius a around cfg.x before cfg.t.
Estimate mc_exit_probability(const SimulationConfig& cfg, double radius);

struct BinSpec {
  int bins = 20;
  /// Histogram range; lo == hi selects the domain (or mean +- 5 sd on lines).
  double lo = 0.0;
  double hi = 0.0;
};

struct DensityBin {
  double lo = 0.0;
  double hi = 0.0;
  double expected = 0.0;  // integral of p_t over the bin
  double observed = 0.0;  // fraction of paths ending in the bin
  double standard_error = 0.0;
  double allowance = 0.0;
  double deviation = 0.0;  // |observed - expected| / standard_error
  bool pass = true;
};

struct DensityCheck {
  std::vector<DensityBin> bins;
  double max_standardized_deviation = 0.0;
  double surviving_fraction = 1.0;
  double expected_survival = 1.0;
  double survival_standard_error = 0.0;
  bool survival_pass = true;
  bool pass = true;
};
/// Bin tolerance: 4 SE plus 1% of the peak density times the bin width.
inline constexpr double kDensitySigma = 4.0;
inline constexpr double kDensityBiasAllowance = 0.01;
/// Survival tolerance in standard errors.
inline constexpr double kSurvivalSigma = 3.0;

/// Histogram of simulated endpoints against bin integrals of the kernel.
DensityCheck mc_density_check(const SimulationConfig& cfg, const Kernel& kernel,
                              const BinSpec& spec = {});

}  // namespace heatlab
