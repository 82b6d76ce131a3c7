#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "heatlab/error.hpp"
#include "heatlab/localization.hpp"
#include "heatlab/montecarlo.hpp"

using namespace heatlab;

namespace {

SimulationConfig line_config(std::size_t paths = 20000) {
  SimulationConfig cfg;
  cfg.manifold = Manifold1D::line();
  cfg.x = 0.3;
  cfg.t = 0.5;
  cfg.dt = 0.005;
  cfg.paths = paths;
  cfg.seed = 77;
  return cfg;
}

struct Moments {
  double mean = 0.0, var = 0.0, mean_se = 0.0, var_se = 0.0;
};

Moments moments(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  m.var = m2 * n / (n - 1);
  m.mean_se = std::sqrt(m2 / n);
  m.var_se = std::sqrt((m4 - m2 * m2) / n);
  return m;
}

}  // namespace

TEST_CASE("Philox known-answer vectors") {
  using P = Philox4x32;
  CHECK(P::block({0, 0, 0, 0}, {0, 0}) ==
        P::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(P::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        P::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(P::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        P::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  const double u0 = uniform_open(0, 0);
  const double u1 = uniform_open(0xffffffffu, 0xffffffffu);
  CHECK(u0 > 0.0);
  CHECK(u1 < 1.0);
}

TEST_CASE("configuration checks") {
  auto cfg = line_config();
  CHECK_NOTHROW(validate(cfg));
  cfg.dt = 0.01;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = line_config(999);
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = line_config();
  cfg.manifold = Manifold1D::dirichlet_interval(0.0, 1.0);
  cfg.x = 1.5;
  CHECK_THROWS(validate(cfg));
}

TEST_CASE("Brownian scaling on the line") {
  auto cfg = line_config();
  const auto s = simulate_endpoints(cfg);
  CHECK(s.absorbed_count == 0);
  const auto m = moments(s.endpoints);
  CHECK(std::abs(m.var - 2 * cfg.t) <= 4 * m.var_se);
  CHECK(std::abs(m.mean - cfg.x) <= 4 * m.mean_se);

  // Sign-flip symmetry about x.
  double above = 0.0;
  for (double e : s.endpoints) above += e > cfg.x ? 1.0 : 0.0;
  const double n = static_cast<double>(s.endpoints.size());
  const double frac = above / n;
  CHECK(std::abs(frac - 0.5) <= 4 * std::sqrt(0.25 / n));
}

TEST_CASE("linear drift mean") {
  auto cfg = line_config();
  cfg.manifold = Manifold1D::weighted_line(Potential{{0.0, 0.0, -1.0}});
  cfg.x = 1.0;
  cfg.dt = 0.001;
  const auto s = simulate_endpoints(cfg);
  const auto m = moments(s.endpoints);
  // Euler-Maruyama has an O(dt) bias on the mean, below 1e-3 here.
  CHECK(std::abs(m.mean - std::exp(-2 * cfg.t)) <= 4 * m.mean_se + 1e-3);
  const double var = (1 - std::exp(-4 * cfg.t)) / 2;
  CHECK(std::abs(m.var - var) <= 4 * m.var_se + 2e-3);
}

TEST_CASE("identical configs give identical samples at any thread count") {
  auto cfg = line_config(5000);
  cfg.manifold = Manifold1D::circle(1.0);
  cfg.threads = 1;
  const auto a = simulate_endpoints(cfg);
  const auto b = simulate_endpoints(cfg);
  cfg.threads = 4;
  const auto c = simulate_endpoints(cfg);
  CHECK(a.endpoints == b.endpoints);
  CHECK(a.endpoints == c.endpoints);
  cfg.seed = 78;
  CHECK(simulate_endpoints(cfg).endpoints != a.endpoints);

  auto e = line_config(5000);
  e.bridge_correction = true;
  e.threads = 1;
  const auto p1 = mc_exit_probability(e, 0.5);
  e.threads = 3;
  const auto p3 = mc_exit_probability(e, 0.5);
  CHECK(p1.value == p3.value);
  CHECK(p1.standard_error == p3.standard_error);
}

TEST_CASE("killed fraction shrinks as the interval grows") {
  std::size_t prev = SIZE_MAX;
  for (double half : {0.4, 0.6, 1.0, 2.0}) {
    SimulationConfig cfg = line_config(5000);
    cfg.manifold = Manifold1D::dirichlet_interval(-half, half);
    cfg.x = 0.1;
    cfg.t = 0.2;
    cfg.dt = 0.001;
    const auto s = simulate_endpoints(cfg);
    CHECK(s.absorbed_count <= prev);
    prev = s.absorbed_count;
    for (std::size_t i = 0; i < s.endpoints.size(); ++i) CHECK(std::isnan(s.endpoints[i]) == (s.absorbed[i] != 0));
  }
}

TEST_CASE("exit probability against the series") {
  auto cfg = line_config(20000);
  cfg.x = 0.0;
  cfg.t = 0.1;
  cfg.dt = 1e-4;
  cfg.bridge_correction = true;
  const auto mc = mc_exit_probability(cfg, 1.0);
  const double exact = exit_probability(Manifold1D::line(), 0.0, 1.0, 0.1).value;
  CHECK(std::abs(mc.value - exact) <= 3 * mc.standard_error);

  cfg.t = 0.001;
  cfg.dt = 1e-5;
  CHECK(mc_exit_probability(cfg, 1.0).value == 0.0);

  // Drifted exit goes through simulation.
  ExitOptions opt;
  opt.paths = 2000;
  const auto drifted =
      exit_probability(Manifold1D::weighted_line(Potential{{0.0, 0.0, -1.0}}), 0.0, 0.5, 0.05, opt);
  CHECK_FALSE(drifted.exact);
  CHECK(drifted.standard_error > 0.0);
}

TEST_CASE("density histograms") {
  SimulationConfig cfg;
  cfg.manifold = Manifold1D::circle(1.0);
  cfg.t = 0.1;
  cfg.dt = 5e-4;
  cfg.paths = 20000;
  cfg.seed = 3;
  const auto circle = mc_density_check(cfg, Kernel::for_manifold(cfg.manifold));
  CHECK(circle.pass);
  CHECK(circle.bins.size() == 20);
  double mass = 0.0;
  for (const auto& b : circle.bins) mass += b.expected;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));

  cfg.manifold = Manifold1D::weighted_line(Potential{{0.0, 0.0, -1.0}});
  cfg.t = 0.2;
  cfg.x = 0.5;
  cfg.dt = 1e-3;
  CHECK(mc_density_check(cfg, Kernel::for_manifold(cfg.manifold)).pass);

  cfg.manifold = Manifold1D::dirichlet_interval(0.0, 1.0);
  cfg.x = 0.4;
  cfg.t = 0.05;
  cfg.dt = 2e-4;
  cfg.bridge_correction = true;
  const auto iv = mc_density_check(cfg, Kernel::for_manifold(cfg.manifold));
  CHECK(iv.survival_pass);
  CHECK(iv.pass);
  const double survive = survival_probability(1.0, 0.4, 0.05);
  CHECK(iv.expected_survival == doctest::Approx(survive).epsilon(1e-8));
}
