#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "heatlab/asymptotics.hpp"
#include "heatlab/error.hpp"

using namespace heatlab;

namespace {

constexpr double kPi = std::numbers::pi;

const Kernel& circle() {
  static const Kernel k = Kernel::for_manifold(Manifold1D::circle(1.0));
  return k;
}
const Kernel& line() {
  static const Kernel k = Kernel::for_manifold(Manifold1D::line());
  return k;
}
const Kernel& h3() {
  static const Kernel k = Kernel::for_manifold(Manifold1D::hyperbolic_radial3());
  return k;
}

std::vector<PointPair> circle_pairs() {
  return {{0.0, 0.1}, {0.0, 0.25}, {0.0, 0.4}, {0.0, 0.5}, {0.3, 0.8}, {0.7, 0.2}};
}

}  // namespace

TEST_CASE("geometric grids") {
  const auto g = geometric_grid(0.005, 1.0, 40);
  REQUIRE(g.size() == 40);
  CHECK(g.front() == 0.005);
  CHECK(g.back() == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t i = 1; i < g.size(); ++i)
    CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]).epsilon(1e-12));
  CHECK_THROWS_AS(geometric_grid(1.0, 0.1, 5), ArgumentError);
}

TEST_CASE("compact closure condition") {
  const auto c = check_K_condition(Manifold1D::circle(1.0), {{0.0, 0.5}, {0.1, 0.9}}, 5.0);
  CHECK(c == std::vector<bool>{true, true});
  const auto iv = Manifold1D::dirichlet_interval(0.0, 1.0);
  CHECK(check_K_condition(iv, {{0.3, 0.7}}, 0.1)[0]);
  CHECK_FALSE(check_K_condition(iv, {{0.05, 0.95}}, 0.2)[0]);
  CHECK(check_K_condition(Manifold1D::line(), {{0.0, 1e6}}, 1.0)[0]);
}

TEST_CASE("antipodal log-Hessian has the two-term form") {
  for (double t : {0.02, 0.01, 0.005}) {
    const Jet j = unit_frame_log_jet(circle(), t, 0.0, 0.5, 2);
    const double exact = -1.0 / (2 * t) + 1.0 / (16 * t * t);
    CHECK(std::abs(j[2] - exact) <= 1e-6 / (16 * t * t));
    CHECK(std::abs(j[1]) < 1e-10 / t);
  }
}

TEST_CASE("unit frame log jet of the gaussian") {
  const Jet a = unit_frame_log_jet(line(), 0.1, 0.0, 0.3, 3);
  CHECK(a[1] == doctest::Approx(0.3 / 0.2).epsilon(1e-14));
  CHECK(a[2] == doctest::Approx(-1 / 0.2).epsilon(1e-14));
  CHECK(std::abs(a[3]) < 1e-10);
}

TEST_CASE("bound-shape scan on the line") {
  const auto r =
      main_bound_scan(line(), {{0.0, 0.0}, {0.0, 1.0}, {0.0, 1e13}}, 1, geometric_grid(0.005, 1, 40));
  CHECK(r.pass);
  CHECK(std::abs(r.fitted.at("C_1") - 0.5) <= 1e-12);
  for (const auto& p : r.points) CHECK(p.statistic <= 0.5 + 1e-12);
}

TEST_CASE("bound-shape scan on the circle") {
  for (int n = 1; n <= 4; ++n) {
    const auto r = main_bound_scan(circle(), circle_pairs(), n, geometric_grid(0.005, 1, 40));
    CHECK(r.pass);
    const double c = r.fitted.at("C_" + std::to_string(n));
    CHECK(std::isfinite(c));
    CHECK(c > 0.0);
    CHECK(r.fitted.at("C_" + std::to_string(n) + "_stability") <= kRefinementStability);
  }
}

TEST_CASE("bound-shape scan on the interval") {
  const Kernel k = Kernel::for_manifold(Manifold1D::dirichlet_interval(0.0, 1.0));
  const auto r = main_bound_scan(k, {{0.3, 0.7}, {0.5, 0.5}, {0.7, 0.3}}, 1,
                                 geometric_grid(0.005, 1, 20));
  CHECK(r.pass);
  CHECK(std::isfinite(r.fitted.at("C_1")));
  CHECK_THROWS_AS(main_bound_scan(k, {{0.01, 0.99}}, 1, {0.1}), DomainError);
}

TEST_CASE("regime constants") {
  const auto l = regime_scan(line(), {{0.0, 0.1}, {0.0, 0.3}, {0.0, 2.0}}, 2,
                             geometric_grid(0.01, 1, 10), 0.4);
  CHECK(l.fitted.at("C_near") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(l.pass);
  const auto c = regime_scan(circle(), circle_pairs(), 2, geometric_grid(0.005, 1, 40), 0.4);
  CHECK(c.pass);
  CHECK(std::isfinite(c.fitted.at("C_far")));
  // Antipodal pairs dominate the far regime: t^2 |d^2 log p| -> 1/16.
  CHECK(c.fitted.at("C_far") >= 1.0 / 16 - 0.01);
  const auto c1 = regime_scan(circle(), circle_pairs(), 1, geometric_grid(0.005, 1, 40), 0.4);
  CHECK(c1.fitted.at("C_near_stability") <= kRefinementStability);
}

TEST_CASE("off-cut residual on the line is zero") {
  for (int n = 1; n <= 4; ++n) {
    const auto r = noncut_check(line(), 0.0, 0.7, n, geometric_grid(1e-3, 0.1, 12));
    CHECK(r.pass);
    CHECK(r.fitted.at("max_abs_rho") <= 1e-10);
  }
}

TEST_CASE("off-cut slope on hyperbolic space") {
  const auto r = noncut_check(h3(), 0.0, 1.0, 2, geometric_grid(1e-3, 0.1, 12));
  const double s = std::sinh(1.0);
  const double slope = 4.0 * (1.0 - 1.0 / (s * s));
  CHECK(r.pass);
  CHECK(std::abs(r.fitted.at("c1") - slope) <= 0.01 * slope);
}

TEST_CASE("off-cut residual on the circle is tiny") {
  const auto r = noncut_check(circle(), 0.0, 0.25, 2, geometric_grid(5e-4, 3e-3, 8));
  CHECK(r.pass);
  CHECK_THROWS_AS(noncut_check(circle(), 0.0, 0.49, 2, {0.01, 0.02, 0.03}), CutLocusError);
}

TEST_CASE("leading cumulant coefficients") {
  const auto c = Manifold1D::circle(1.0);
  const auto two = cumulant_leading(c, 0.0, 0.5, 2);
  REQUIRE(two.exact.has_value());
  CHECK(*two.exact == Rational(1, 16));
  CHECK(two.value == 0.0625);
  CHECK(cumulant_leading(c, 0.0, 0.5, 3).value == 0.0);
  CHECK(*cumulant_leading(c, 0.0, 0.5, 4).exact == Rational(-1, 128));
  CHECK(*cumulant_leading(c, 0.0, 0.5, 6).exact == Rational(1, 256));
  for (int n = 2; n <= 6; ++n) {
    CHECK(cumulant_leading(c, 0.0, 0.3, n).value == 0.0);
    CHECK(cumulant_leading(Manifold1D::line(), 0.0, 2.0, n).value == 0.0);
  }
}

TEST_CASE("cumulant limits from the theta jet") {
  const std::vector<double> grid{0.02, 0.01, 0.005};
  const auto two = cumulant_vs_kernel(circle(), 0.0, 0.5, 2, grid);
  CHECK(two.pass);
  const double t = 0.01;
  const double scaled = t * t * unit_frame_log_jet(circle(), t, 0.0, 0.5, 2)[2];
  CHECK(std::abs(scaled - (1.0 / 16 - t / 2)) <= 1e-6);
  for (int n : {3, 4, 6}) {
    const auto r = cumulant_vs_kernel(circle(), 0.0, 0.5, n, grid);
    CHECK(r.pass);
    CHECK(r.fitted.at("gap") <= 1e-4);
  }
  CHECK(cumulant_vs_kernel(circle(), 0.0, 0.5, 4, grid).fitted.at("limit") == -1.0 / 128);
}

TEST_CASE("Varadhan limits") {
  const auto grid = geometric_grid(1e-3, 0.1, 12);
  const auto l = varadhan_limit_check(line(), 0.0, 0.6, grid);
  CHECK(l.pass);
  for (const auto& p : l.points) {
    const double t = p.point.t;
    CHECK(p.statistic == doctest::Approx(-2.0 * t * std::log(4 * kPi * t)).epsilon(1e-10));
  }
  const auto c = varadhan_limit_check(circle(), 0.0, 0.3, grid);
  const auto ref = varadhan_limit_check(line(), 0.0, 0.3, grid);
  CHECK(c.pass);
  REQUIRE(c.points.size() == ref.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    // Nearest image sits at distance 0.7: relative weight e^{-(0.49 - 0.09)/4t}.
    const double t = c.points[i].point.t;
    CHECK(std::abs(c.points[i].statistic - ref.points[i].statistic) <=
          4 * t * std::exp(-0.1 / t) + 1e-15);
  }
  const auto d = varadhan_limit_check(line(), 0.0, 0.6, grid, 1e-3, 1);
  CHECK(d.pass);
  CHECK(std::abs(d.fitted.at("v_at_t_min")) < 0.05);
  CHECK(varadhan_limit_check(circle(), 0.0, 0.5, grid).pass);
}

TEST_CASE("Ben Arous leading coefficient") {
  const auto grid = geometric_grid(1e-3, 0.05, 10);
  CHECK(benarous_c0(line(), 0.0, 0.4, grid).c0 ==
        doctest::Approx(1 / std::sqrt(4 * kPi)).epsilon(1e-12));
  CHECK(benarous_c0(circle(), 0.0, 0.3, grid).c0 ==
        doctest::Approx(1 / std::sqrt(4 * kPi)).epsilon(1e-9));
  const auto h = benarous_c0(h3(), 0.0, 1.0, grid);
  CHECK(h.dimension == 3);
  CHECK(h.c0 == doctest::Approx(std::pow(4 * kPi, -1.5) / std::sinh(1.0)).epsilon(1e-5));
  CHECK(extrapolate_to_zero(1.0, 3.0, 2.0, 5.0) == 1.0);
}

TEST_CASE("measured constants are invariant under doubled series cutoffs") {
  ScanOptions wide;
  wide.series_scale = 2.0;
  const auto grid = geometric_grid(0.005, 1, 12);
  for (int n = 1; n <= 3; ++n) {
    const auto a = main_bound_scan(circle(), circle_pairs(), n, grid);
    const auto b = main_bound_scan(circle(), circle_pairs(), n, grid, wide);
    for (const auto& [key, v] : a.fitted) CHECK(std::abs(v - b.fitted.at(key)) <= 1e-12 * std::abs(v));
  }
  const Kernel iv = Kernel::for_manifold(Manifold1D::dirichlet_interval(0.0, 1.0));
  const auto a = main_bound_scan(iv, {{0.3, 0.7}, {0.4, 0.6}}, 2, grid);
  const auto b = main_bound_scan(iv, {{0.3, 0.7}, {0.4, 0.6}}, 2, grid, wide);
  CHECK(std::abs(a.fitted.at("C_2") - b.fitted.at("C_2")) <= 1e-12 * a.fitted.at("C_2"));
  const auto ca = cumulant_vs_kernel(circle(), 0.0, 0.5, 4, {0.02, 0.01, 0.005});
  const auto cb = cumulant_vs_kernel(circle(), 0.0, 0.5, 4, {0.02, 0.01, 0.005}, 1e-4, wide);
  CHECK(std::abs(ca.fitted.at("extrapolated") - cb.fitted.at("extrapolated")) <=
        1e-12 * std::abs(ca.fitted.at("extrapolated")));
}

TEST_CASE("scans are independent of the thread count") {
  ScanOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const auto grid = geometric_grid(0.005, 1, 12);
  const auto a = main_bound_scan(circle(), circle_pairs(), 2, grid, one);
  const auto b = main_bound_scan(circle(), circle_pairs(), 2, grid, four);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i].statistic == b.points[i].statistic);
}
