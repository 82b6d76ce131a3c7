#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"
#include "heatlab/images.hpp"
#include "heatlab/manifold.hpp"
#include "heatlab/partitions.hpp"

using namespace heatlab;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Entries in [-w, w]; a positive jet has p[0] in [e^{-w/2}, e^{w/2}].
Jet random_jet(std::mt19937_64& rng, int n, bool positive, double w = 1.0) {
  std::uniform_real_distribution<double> u(-w, w);
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (auto& x : v) x = u(rng);
  if (positive) v[0] = std::exp(0.5 * u(rng));
  return Jet(v);
}

// Bound check for orders where the value is small against the partition scale.
double jet_scale(const Jet& j) {
  double s = 0.0;
  for (double v : j.values) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

TEST_CASE("set partition counts follow the Bell recurrence") {
  CHECK(set_partitions(1).size() == 1);
  CHECK(set_partitions(3).size() == 5);
  CHECK(set_partitions(4).size() == 15);
  const std::uint64_t bell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975};
  for (int n = 0; n <= 10; ++n) CHECK(bell_number(n) == bell[n]);
  for (int n = 1; n <= 10; ++n) {
    const auto& fam = set_partitions(n);
    CHECK(fam.size() == bell_number(n));
    std::uint64_t grouped = 0;
    for (const auto& sig : block_signatures(n)) grouped += sig.count;
    CHECK(grouped == bell_number(n));
  }
}

TEST_CASE("set partitions are distinct restricted-growth strings") {
  const auto& fam = set_partitions(5);
  std::set<std::vector<std::uint8_t>> seen;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto r = fam.rgs(i);
    CHECK(r[0] == 0);
    int top = 0;
    for (auto c : r) {
      CHECK(c <= top + 1);
      top = std::max<int>(top, c);
    }
    CHECK(fam.block_count(i) == top + 1);
    int total = 0;
    for (const auto& b : fam.blocks(i)) total += static_cast<int>(b.size());
    CHECK(total == 5);
    seen.emplace(r.begin(), r.end());
  }
  CHECK(seen.size() == fam.size());
  CHECK_THROWS(set_partitions(13));
}

TEST_CASE("log and exp jets are inverse") {
  std::mt19937_64 rng(42);
  for (int n = 0; n <= 6; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      const Jet p = random_jet(rng, n, true);
      const Jet back = exp_jet(log_jet(p));
      const double scale = jet_scale(p);
      for (int k = 0; k <= n; ++k) CHECK(std::abs(back[k] - p[k]) <= 1e-12 * scale);
      const Jet l = random_jet(rng, n, false);
      const Jet l2 = log_jet(exp_jet(l));
      const double ls = jet_scale(l);
      for (int k = 0; k <= n; ++k) CHECK(std::abs(l2[k] - l[k]) <= 1e-12 * std::max(ls, 1.0));
    }
  }
}

TEST_CASE("roundtrip error of badly scaled jets stays within the propagated bound") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const Jet p = random_jet(rng, 6, true, 6.0);
    const Jet back = exp_jet(log_jet(p));
    for (int k = 0; k <= 6; ++k) CHECK(std::abs(back[k] - p[k]) <= back.error(k));
  }
}

TEST_CASE("log jet against symbolic differentiation") {
  // sympy: F(u) = exp(sin u) (2 + u^2) at u = 2/5.
  const std::vector<double> f{3.188423404322772699164350, 4.117629987244178265818592,
                              6.590880382999408492849099, 5.907257743132397937306833,
                              -9.765983644107732066747128, -64.12693150527111468228684,
                              -109.4571386378848628809609};
  const double lf[] = {1.159526564004724126067761, 1.291431364373255453168897,
                       0.3993333723689901119002177, -1.848257051514443280227780,
                       -0.7713408012275087433193216, 7.791793378009555416643467,
                       -2.365226983652861897067744};
  const Jet l = log_jet(Jet(f));
  for (int k = 0; k <= 6; ++k) CHECK(std::abs(l[k] - lf[k]) < 1e-12 * std::max(1.0, std::abs(lf[k])));
}

TEST_CASE("gaussian log jet and exponent") {
  const double t = 0.3, x = 0.2, y = -0.6;
  const Jet g = gaussian_density_jet(x, 2 * t, y, 3);
  const Jet l = log_jet(g);
  CHECK(l[1] == doctest::Approx((x - y) / (2 * t)).epsilon(1e-14));
  CHECK(l[2] == doctest::Approx(-1 / (2 * t)).epsilon(1e-14));

  const Jet zero = exp_jet(Jet({0.0, 0.0, 0.0, 0.0}));
  CHECK(zero[0] == 1.0);
  for (int k = 1; k <= 3; ++k) CHECK(zero[k] == 0.0);

  // Exponent -(y - x)^2/(4t) - log sqrt(4 pi t) has jet {value, (x - y)/2t, -1/2t, 0}.
  const Jet e({-0.5 * std::log(4 * M_PI * t) - (y - x) * (y - x) / (4 * t), (x - y) / (2 * t),
               -1 / (2 * t), 0.0});
  const Jet back = exp_jet(e);
  for (int k = 0; k <= 3; ++k) CHECK(rel(back[k], g[k]) < 1e-13);
}

TEST_CASE("exp jet obeys the partition bound") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double b = 1.0 + 10.0 * u(rng);
    std::vector<double> c(6);
    for (auto& v : c) v = u(rng) * 3.0;
    std::vector<double> l(7);
    l[0] = std::log(u(rng));
    std::uniform_int_distribution<int> sign(0, 1);
    for (int k = 1; k <= 6; ++k) {
      // |d^k log p| <= C_k B^k, saturated with random signs.
      l[k] = (sign(rng) ? 1.0 : -1.0) * c[k - 1] * std::pow(b, k) * u(rng);
    }
    const Jet p = exp_jet(Jet(l));
    for (int n = 1; n <= 6; ++n) {
      const double bound = exp_bound_constant(c, n) * std::pow(b, n) * p[0];
      CHECK(std::abs(p[n]) <= bound * (1 + 1e-12));
    }
  }
  const std::vector<double> ones{1, 1, 1, 1};
  for (int n = 1; n <= 4; ++n) CHECK(exp_bound_constant(ones, n) == bell_number(n));
  CHECK_THROWS_AS(exp_bound_constant(ones, 5), ArgumentError);
}

TEST_CASE("measure change") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Jet p = random_jet(rng, 5, true);
    const Jet ident = measure_change_jet(p, Jet::constant(1.0, 5), Measure::Symmetrizing);
    for (int k = 0; k <= 5; ++k) CHECK(ident[k] == p[k]);

    const Jet logd = random_jet(rng, 5, false);
    const Jet d = exp_jet(logd);
    const Jet dinv = exp_jet(jet_scaled(logd, -1.0));
    const Jet q = measure_change_jet(p, d, Measure::Symmetrizing);
    CHECK(q.measure == Measure::Symmetrizing);
    const Jet r = measure_change_jet(q, dinv, Measure::Riemannian);
    const double scale = jet_scale(p);
    for (int k = 0; k <= 5; ++k) CHECK(std::abs(r[k] - p[k]) <= 1e-12 * scale * 10);

    // log of a product: orders >= 1 shift by the log density.
    const Jet lq = log_jet(q), lp = log_jet(p);
    for (int k = 1; k <= 5; ++k)
      CHECK(std::abs(lq[k] - lp[k] - logd[k]) <= 1e-10 * std::max({1.0, jet_scale(lq), jet_scale(lp)}));
  }
  const Jet px({2.0, 3.0, 4.0});
  const Jet sx = measure_change_x_jet(px, 0.5, Measure::Symmetrizing);
  CHECK(sx[0] == 1.0);
  CHECK(sx[2] == 2.0);
}

TEST_CASE("covariant derivatives") {
  std::mt19937_64 rng(13);
  for (int n = 1; n <= 6; ++n) {
    const Jet f = random_jet(rng, n, false);
    const Jet cv = covariant_jet(f, Jet::constant(0.0, std::max(0, n - 2)), n);
    for (int k = 0; k <= n; ++k) CHECK(cv[k] == f[k]);
  }
  // g = e^{2u}, Gamma = 1: nabla^2 f = f'' - f'.
  const Jet two = covariant_jet(Jet({0.0, 2.0, 3.0}), Jet::constant(1.0, 0), 2);
  CHECK(two[2] == 1.0);

  // f = 1 + 2u - u^2 + u^3/2 + u^4/3 - u^5/7 at u = 3/10 with Gamma = 1, from
  // T_N = T_{N-1}' - (N-1) Gamma T_{N-1} in exact arithmetic.
  const double u = 0.3;
  std::vector<double> partial{1 + 2 * u - u * u + u * u * u / 2 + std::pow(u, 4) / 3 - std::pow(u, 5) / 7,
                              2 - 2 * u + 1.5 * u * u + 4 * std::pow(u, 3) / 3 - 5 * std::pow(u, 4) / 7,
                              -2 + 3 * u + 4 * u * u - 20 * std::pow(u, 3) / 7,
                              3 + 8 * u - 60 * u * u / 7};
  const Manifold1D m = Manifold1D::line().with_metric(MetricDensity{{1.0}, 2.0});
  const Jet cv = covariant_jet(Jet(partial), christoffel_jet(m, u, 1), 3);
  const double ref[] = {1.525852857142857142857143, 1.565214285714285714285714,
                        -2.382357142857142857142857, 10.21042857142857142857143};
  for (int k = 0; k <= 3; ++k) CHECK(rel(cv[k], ref[k]) < 1e-14);
  CHECK_THROWS_AS(covariant_jet(Jet({1.0, 2.0}), Jet::constant(0.0, 0), 2), ArgumentError);
}

TEST_CASE("joint cumulants") {
  MidpointMeasure pm;
  pm.atoms = {{0.25, 0.5, {1.0}}, {0.75, 0.5, {-1.0}}};
  const auto k2 = joint_cumulant(pm, 2);
  CHECK(k2.value == 1.0);
  REQUIRE(k2.exact.has_value());
  CHECK(*k2.exact == Rational(1));
  CHECK(joint_cumulant(pm, 3).value == 0.0);
  CHECK(joint_cumulant(pm, 4).value == -2.0);
  CHECK(*joint_cumulant(pm, 4).exact == Rational(-2));
  CHECK(joint_cumulant(pm, 6).value == 16.0);
  CHECK(joint_cumulant(pm, 1).value == 0.0);

  MidpointMeasure point;
  point.atoms = {{0.5, 1.0, {0.7}}};
  for (int n = 2; n <= 8; ++n) CHECK(joint_cumulant(point, n).value == 0.0);
  CHECK(joint_cumulant(point, 1).value == doctest::Approx(0.7));

  // Covariance of two variables on three atoms.
  const std::vector<double> w{0.2, 0.3, 0.5};
  const std::vector<std::vector<double>> xy{{1.0, 2.0, -1.0}, {0.0, 1.0, 3.0}};
  const double ex = 0.2 + 0.6 - 0.5, ey = 0.3 + 1.5, exy = 0.6 - 1.5;
  CHECK(joint_cumulant(w, xy) == doctest::Approx(exy - ex * ey).epsilon(1e-14));

  CHECK(to_rational(0.375) == Rational(3, 8));
  CHECK(is_small_dyadic(0.25));
  CHECK(is_small_dyadic(0.1));
  CHECK_FALSE(is_small_dyadic(1e-30));
}

TEST_CASE("jet arithmetic") {
  const Jet a({1.0, 2.0, 3.0});
  const Jet b({2.0, -1.0, 0.5});
  const Jet p = jet_product(a, b);
  CHECK(p[0] == 2.0);
  CHECK(p[1] == 2.0 * 2.0 + 1.0 * -1.0);
  CHECK(p[2] == 3.0 * 2.0 + 2 * 2.0 * -1.0 + 1.0 * 0.5);
  CHECK(jet_derivative(a).order() == 1);
  CHECK(jet_derivative(a)[1] == 3.0);
  CHECK(a.truncated(4).order() == 4);
  CHECK(a.truncated(4)[4] == 0.0);
  CHECK(jet_sum(a, b)[2] == 3.5);
  CHECK_THROWS_AS(log_jet(Jet({-1.0, 0.0})), DomainError);
}
