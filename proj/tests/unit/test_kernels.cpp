#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/kernels.hpp"

using namespace heatlab;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Trapezoid rule with `n` panels of f over [lo, hi].
template <class F>
double trapezoid(F&& f, double lo, double hi, int n, bool periodic) {
  const double h = (hi - lo) / n;
  // Open domains: the Dirichlet kernel vanishes at both ends.
  double s = 0.0;
  for (int i = periodic ? 0 : 1; i < n; ++i) s += f(lo + i * h);
  return s * h;
}

}  // namespace

TEST_CASE("theta kernel against extended-precision sums") {
  const auto c = Manifold1D::circle(1.0);
  // mpmath, 40 digits, direct summation of the image series.
  const double anti[] = {0.1752830049381196941546122, 0.0, 23.00589440117111052407912, 0.0,
                         499.8304480669541314921069};
  const Jet j = theta_kernel_jet(c, 0.02, 0.0, 0.5, 4);
  for (int k : {0, 2, 4}) CHECK(rel(j[k], anti[k]) < 1e-13);
  CHECK(std::abs(j[1]) < 1e-14 * j[0]);
  CHECK(std::abs(j[3]) < 1e-12 * j[4]);

  const double off[] = {0.9135457588669161790886526, -1.65467162166071801591756,
                        3.48442055083849709629574, 64.67222249994959067109776,
                        -148.8236465280147835710761};
  const Jet o = theta_kernel_jet(c, 0.05, 0.0, 0.3, 4);
  for (int k = 0; k <= 4; ++k) CHECK(rel(o[k], off[k]) < 1e-12);
}

TEST_CASE("theta kernel reflection symmetry and positivity") {
  const auto c = Manifold1D::circle(1.0);
  for (double t : {0.005, 0.05, 0.5, 3.0}) {
    CHECK(theta_kernel_jet(c, t, 0.0, 0.3, 0)[0] ==
          doctest::Approx(theta_kernel_jet(c, t, 0.0, -0.3, 0)[0]).epsilon(1e-14));
    for (double y : {0.0, 0.2, 0.5, 0.9}) CHECK(theta_kernel_jet(c, t, 0.0, y, 0)[0] > 0.0);
  }
  // Long-time limit is the uniform density.
  CHECK(theta_kernel_jet(c, 5.0, 0.0, 0.37, 0)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gauss kernel closed forms") {
  const auto line = Manifold1D::line();
  CHECK(gauss_kernel_jet(line, 0.25, 0.0, 0.0, 1)[1] == 0.0);
  for (double t : {0.01, 0.3, 2.0}) {
    const Jet j = gauss_kernel_jet(line, t, 0.4, -1.1, 1);
    CHECK(j[1] == doctest::Approx((0.4 - -1.1) / (2 * t) * j[0]).epsilon(1e-14));
  }
  // sympy differentiation of (4 pi t)^{-1/2} exp(-s^2/4t) at t = 1/10, s = 1.
  const double ref[] = {0.07322491280963243556600148, -0.3661245640481621778300074,
                        1.464498256192648711320030, -3.661245640481621778300074};
  const Jet g = gauss_kernel_jet(line, 0.1, 0.0, 1.0, 3);
  for (int k = 0; k <= 3; ++k) CHECK(rel(g[k], ref[k]) < 1e-14);
}

TEST_CASE("interval kernel backends agree") {
  const auto iv = Manifold1D::dirichlet_interval(0.0, 1.0);
  const Jet a = interval_kernel_jet(iv, 0.05, 0.3, 0.7, 2, IntervalBackend::Eigen);
  const Jet b = interval_kernel_jet(iv, 0.05, 0.3, 0.7, 2, IntervalBackend::Images);
  CHECK(std::abs(a[0] - b[0]) < 1e-12);
  for (double t : {0.02, 0.125, 0.3}) {
    for (double y : {0.1, 0.5, 0.85}) {
      const double e = interval_kernel_jet(iv, t, 0.4, y, 0, IntervalBackend::Eigen)[0];
      const double m = interval_kernel_jet(iv, t, 0.4, y, 0, IntervalBackend::Images)[0];
      CHECK(std::abs(e - m) < 1e-12);
    }
  }
  CHECK(interval_kernel_jet(iv, 0.05, 0.5, 0.5, 1)[1] == doctest::Approx(0.0).scale(1.0));
  double prev = 1.0;
  for (double x : {1e-2, 1e-3, 1e-4, 1e-6}) {
    const double v = interval_kernel_jet(iv, 0.05, x, 0.6, 0)[0];
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-4);
  CHECK_THROWS_AS(interval_kernel_jet(iv, 0.05, 0.0, 0.6, 0), DomainError);
}

TEST_CASE("weighted line kernel") {
  const double lambda = 1.0;
  const auto m = Manifold1D::weighted_line(Potential{{0.0, 0.0, -lambda}});
  const auto flat = Manifold1D::weighted_line(Potential{{0.0, 0.0, -1e-9}});
  CHECK(rel(weighted_line_kernel_jet(flat, 0.3, 0.2, -0.4, 0)[0],
            gauss_kernel_jet(Manifold1D::line(), 0.3, 0.2, -0.4, 0)[0]) < 1e-8);

  const auto law = weighted_line_law(m, 0.2, 0.5);
  CHECK(law.mean == doctest::Approx(0.5 * std::exp(-0.4)).epsilon(1e-14));
  CHECK(law.variance == doctest::Approx((1 - std::exp(-0.8)) / 2.0).epsilon(1e-14));

  // p^nu(x, y) = p(x, y) e^{-f(y)} is symmetric with nu = e^f mu.
  for (double t : {0.05, 0.3, 1.5}) {
    for (auto [x, y] : {std::pair{0.5, -0.2}, {1.0, 2.0}, {-0.7, 0.1}}) {
      const double pxy = weighted_line_kernel_jet(m, t, x, y, 0)[0] * std::exp(lambda * y * y);
      const double pyx = weighted_line_kernel_jet(m, t, y, x, 0)[0] * std::exp(lambda * x * x);
      CHECK(rel(pxy, pyx) < 1e-10);
    }
  }

  // Forward equation in y: d_t p = p'' - (Z p)' with Z(y) = -2 lambda y.
  const double t = 0.1, x = 0.5, y = -0.2;
  const Jet j = weighted_line_kernel_jet(m, t, x, y, 2);
  const auto dt = ridders([&](double s) { return weighted_line_kernel_jet(m, s, x, y, 0)[0]; },
                          t, 0.025, 1);
  const double forward = j[2] - (-2 * lambda * y * j[1] - 2 * lambda * j[0]);
  CHECK(std::abs(dt.value - forward) < 1e-8);
  CHECK(std::abs(pde_residual(m, KernelId::Mehler, t, x, y).value) < 1e-8);

  CHECK_THROWS_AS(
      weighted_line_kernel_jet(Manifold1D::weighted_line(Potential{{0, 0, 0, 1.0}}), 0.1, 0, 0, 0),
      UnsupportedConfiguration);
}

TEST_CASE("hyperbolic radial kernel") {
  const auto h = Manifold1D::hyperbolic_radial3();
  for (double t : {0.01, 0.1, 1.0})
    for (double r : {0.1, 1.0, 4.0}) CHECK(hyperbolic3_radial_jet(h, t, r, 0)[0] > 0.0);
  CHECK(std::abs(pde_residual(h, KernelId::H3, 0.1, 0.0, 1.0).value) < 1e-8);

  // sympy differentiation of (4 pi t)^{-3/2} r / sinh r exp(-t - r^2/4t) at t = 1/20, r = 4/5.
  const double p[] = {0.07012910927031143900066259, -0.5789817676228348358775800,
                      4.058085025129153688593860};
  const double lp[] = {-2.657417317636016420933121, -8.255940702043706621226360,
                       -10.29464260192810803629474};
  const Jet j = hyperbolic3_radial_jet(h, 0.05, 0.8, 2);
  const Jet l = hyperbolic3_radial_log_jet(h, 0.05, 0.8, 2);
  for (int k = 0; k <= 2; ++k) {
    CHECK(rel(j[k], p[k]) < 1e-13);
    CHECK(rel(l[k], lp[k]) < 1e-13);
  }
}

TEST_CASE("spectral backend") {
  const auto flat = Manifold1D::weighted_circle(1.0, Potential{});
  const auto c = Manifold1D::circle(1.0);
  for (double t : {0.01, 0.05, 0.2}) {
    const double s = spectral_kernel_jet(flat, 2048, t, 0.0, 0.3, 0)[0];
    CHECK(std::abs(s - theta_kernel_jet(c, t, 0.0, 0.3, 0)[0]) < 1e-8);
  }

  const auto m = Manifold1D::weighted_circle(1.0, Potential{{0.0, 0.3}});
  SpectralOptions coarse;
  coarse.grid_size = 1024;
  coarse.refine = true;
  SpectralOptions fine = coarse;
  fine.grid_size = 2048;
  const Jet a = spectral_kernel_jet(m, 0.05, 0.0, 0.3, 0, coarse);
  const Jet b = spectral_kernel_jet(m, 0.05, 0.0, 0.3, 0, fine);
  CHECK(std::abs(a[0] - b[0]) <= a.error(0));
  for (double x : {0.0, 0.25, 0.6}) CHECK(spectral_kernel_jet(m, 2048, 0.1, x, x, 0)[0] > 0.0);

  // Symmetry of p^nu on the weighted circle.
  const double pn = spectral_kernel_jet(m, 2048, 0.1, 0.1, 0.7, 0, Measure::Symmetrizing)[0];
  const double pr = spectral_kernel_jet(m, 2048, 0.1, 0.7, 0.1, 0, Measure::Symmetrizing)[0];
  CHECK(rel(pn, pr) < 1e-10);
  CHECK(spectral_cache_size() > 0);
  clear_spectral_cache();
  CHECK(spectral_cache_size() == 0);
  CHECK_THROWS_AS(spectral_kernel_jet(m, 1000, 0.1, 0.0, 0.3, 0), ArgumentError);
}

TEST_CASE("kernel jets are positive on the open domain") {
  const Kernel kernels[] = {
      Kernel::for_manifold(Manifold1D::circle(1.0)),
      Kernel::for_manifold(Manifold1D::line()),
      Kernel::for_manifold(Manifold1D::dirichlet_interval(0.0, 1.0)),
      Kernel::for_manifold(Manifold1D::weighted_line(Potential{{0.0, 0.0, -0.5}})),
      Kernel::for_manifold(Manifold1D::weighted_circle(1.0, Potential{{0.0, 0.3}}), 512),
  };
  for (const auto& k : kernels) {
    for (double t : {0.005, 0.05, 0.5}) {
      for (double y : {0.05, 0.3, 0.5, 0.95}) CHECK(k.value(t, 0.2, y) > 0.0);
    }
  }
}

TEST_CASE("symmetry of the symmetrizing-measure kernel") {
  const Kernel kernels[] = {
      Kernel::for_manifold(Manifold1D::circle(1.0)),
      Kernel::for_manifold(Manifold1D::line()),
      Kernel::for_manifold(Manifold1D::dirichlet_interval(0.0, 1.0)),
      Kernel::for_manifold(Manifold1D::weighted_line(Potential{{0.0, 0.4, -0.5}})),
      Kernel::for_manifold(Manifold1D::weighted_circle(1.0, Potential{{0.0, 0.3, -0.2}}), 1024),
  };
  for (const auto& k : kernels) {
    const auto& m = k.manifold();
    for (double t : {0.02, 0.2}) {
      const double x = 0.15, y = 0.65;
      const double pxy = k.value(t, x, y) * std::exp(-m.potential_value(y));
      const double pyx = k.value(t, y, x) * std::exp(-m.potential_value(x));
      CHECK(rel(pxy, pyx) < 1e-10);
    }
  }
}

TEST_CASE("Chapman-Kolmogorov on the circle and the interval") {
  const Kernel circle = Kernel::for_manifold(Manifold1D::circle(1.0));
  const Kernel interval = Kernel::for_manifold(Manifold1D::dirichlet_interval(0.0, 1.0));
  for (auto [s, t] : {std::pair{0.02, 0.03}, {0.05, 0.1}, {0.2, 0.4}}) {
    const double x = 0.1, y = 0.45;
    const double c = trapezoid([&](double z) { return circle.value(s, x, z) * circle.value(t, z, y); },
                               0.0, 1.0, 4096, true);
    CHECK(std::abs(c - circle.value(s + t, x, y)) < 1e-6);
    const double i = trapezoid(
        [&](double z) { return interval.value(s, x, z) * interval.value(t, z, y); }, 0.0, 1.0,
        4096, false);
    CHECK(std::abs(i - interval.value(s + t, x, y)) < 1e-6);
  }
}

TEST_CASE("doubling the series cutoff stays within the reported tail bound") {
  const auto c = Manifold1D::circle(1.0);
  for (double t : {0.005, 0.05, 0.5, 2.0}) {
    const auto base = theta_series(c, t, 0.0, 0.4, 3);
    const auto wide = theta_series(c, t, 0.0, 0.4, 3, 2.0 * std::max(1.0, base.truncation.cutoff * 0.5));
    for (int k = 0; k <= 3; ++k) {
      CHECK(std::abs(base.jet[k] - wide.jet[k]) <=
            base.truncation.tail_bound[k] + 1e-15 * std::abs(wide.jet[k]) + 1e-300);
    }
  }
  const auto iv = Manifold1D::dirichlet_interval(0.0, 1.0);
  for (double t : {0.2, 1.0}) {
    const auto base = interval_series(iv, t, 0.3, 0.6, 2, IntervalBackend::Eigen);
    const auto wide =
        interval_series(iv, t, 0.3, 0.6, 2, IntervalBackend::Eigen, 2.0 * base.truncation.cutoff);
    for (int k = 0; k <= 2; ++k) {
      CHECK(std::abs(base.jet[k] - wide.jet[k]) <=
            base.truncation.tail_bound[k] + 1e-15 * std::abs(wide.jet[k]));
    }
  }
  const Kernel k = Kernel::for_manifold(c);
  const Kernel k2 = k.with_series_scale(2.0);
  CHECK(k2.series_scale() == 2.0);
  for (double t : {0.01, 0.1, 1.0}) {
    const Jet a = k.y_jet(t, 0.0, 0.3, 2);
    const Jet b = k2.y_jet(t, 0.0, 0.3, 2);
    for (int d = 0; d <= 2; ++d) CHECK(std::abs(a[d] - b[d]) <= a.error(d) + 1e-15 * std::abs(b[d]));
  }
}

TEST_CASE("jets agree with finite differences of lower orders") {
  const Kernel kernels[] = {
      Kernel::for_manifold(Manifold1D::circle(1.0)),
      Kernel::for_manifold(Manifold1D::line()),
      Kernel::for_manifold(Manifold1D::dirichlet_interval(0.0, 1.0)),
      Kernel::for_manifold(Manifold1D::weighted_line(Potential{{0.0, 0.0, -1.0}})),
  };
  for (const auto& k : kernels) {
    for (double t : {0.01, 0.1}) {
      const double x = 0.3, y = 0.55;
      const Jet j = k.y_jet(t, x, y, 4);
      double scale = 0.0;
      for (int d = 0; d <= 4; ++d) scale = std::max(scale, std::abs(j[d]) * std::pow(std::sqrt(t), d));
      for (int d = 1; d <= 4; ++d) {
        const double h = 0.1 * std::sqrt(t);
        const auto fd = ridders([&](double s) { return k.y_jet(t, x, s, d - 1)[d - 1]; }, y, h, 1);
        const double norm = std::max(std::abs(j[d]), scale / std::pow(std::sqrt(t), d));
        CHECK(std::abs(fd.value - j[d]) <= 1e-6 * norm);
      }
    }
  }
}

TEST_CASE("heat equation residuals") {
  CHECK(std::abs(pde_residual(Manifold1D::line(), KernelId::Gauss, 0.3, 0.1, 0.7).value) < 1e-9);
  CHECK(std::abs(pde_residual(Manifold1D::circle(1.0), KernelId::Theta, 0.05, 0.0, 0.3).value) <
        1e-8);
  CHECK(std::abs(pde_residual(Manifold1D::dirichlet_interval(0.0, 1.0), KernelId::Interval, 0.05,
                              0.4, 0.6)
                     .value) < 1e-8);
}

TEST_CASE("kernel selection and logs") {
  CHECK(default_kernel(Manifold1D::circle(1.0)) == KernelId::Theta);
  CHECK(default_kernel(Manifold1D::line()) == KernelId::Gauss);
  CHECK(default_kernel(Manifold1D::dirichlet_interval(0, 1)) == KernelId::Interval);
  CHECK(default_kernel(Manifold1D::weighted_line(Potential{{0, 0, -1.0}})) == KernelId::Mehler);
  CHECK(default_kernel(Manifold1D::weighted_circle(1.0, Potential{{0, 0.3}})) ==
        KernelId::Spectral);
  CHECK(default_kernel(Manifold1D::hyperbolic_radial3()) == KernelId::H3);
  CHECK(parse_kernel_id(to_string(KernelId::Interval)) == KernelId::Interval);

  const Kernel g = Kernel::for_manifold(Manifold1D::line());
  const Jet l = g.y_log_jet(0.1, 0.2, -0.5, 3);
  CHECK(l[0] == doctest::Approx(-0.5 * std::log(4 * kPi * 0.1) - 0.49 / 0.4).epsilon(1e-14));
  CHECK(l[1] == doctest::Approx(0.7 / 0.2).epsilon(1e-14));
  CHECK(l[2] == doctest::Approx(-1 / 0.2).epsilon(1e-14));
  CHECK(std::abs(l[3]) < 1e-10);
  // Underflowing kernel still has a finite log.
  CHECK(g.log_value(1e-4, 0.0, 1.0) == doctest::Approx(-0.5 * std::log(4 * kPi * 1e-4) - 2500.0));
  const Jet xl = g.x_log_jet(0.1, 0.2, -0.5, 1);
  CHECK(xl[1] == doctest::Approx(-0.7 / 0.2).epsilon(1e-14));
  CHECK_THROWS_AS(Kernel(Manifold1D::line(), KernelId::Theta), UnsupportedConfiguration);
}
