#include "heatlab/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "heatlab/error.hpp"
#include "heatlab/montecarlo.hpp"

namespace heatlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

void require_drift_free(const Manifold1D& m, const char* what) {
  if (m.kind() == ManifoldKind::HyperbolicRadial3) {
    throw UnsupportedConfiguration(std::string(what) + ": not available on " + m.id());
  }
  if (m.has_drift()) {
    throw UnsupportedConfiguration(std::string(what) +
                                   ": closed forms exist only for drift-free models");
  }
}

double lift_into(const Manifold1D& m, const OpenArc& u, double p) {
  if (!m.is_periodic()) return p;
  const double L = m.circumference();
  double off = std::fmod(p - u.lo, L);
  if (off < 0.0) off += L;
  return u.lo + off;
}

// U intersected with the domain, in the coordinates used by the images.
OpenArc effective_set(const Manifold1D& m, const OpenArc& u) {
  if (!(u.hi > u.lo)) throw ArgumentError("open set must have lo < hi");
  if (m.is_periodic() && u.length() > m.circumference() * (1.0 + 1e-15)) {
    throw ArgumentError("arc longer than the circle");
  }
  OpenArc out = u;
  if (m.kind() == ManifoldKind::DirichletInterval) {
    out.lo = std::max(out.lo, m.lower());
    out.hi = std::min(out.hi, m.upper());
    if (!(out.hi > out.lo)) throw ArgumentError("open set misses the interval");
  }
  return out;
}

bool inside(const OpenArc& u, double p) { return p > u.lo && p < u.hi; }

// Images of the killed kernel on u started at x (already lifted).
std::vector<ImageFamily> killed_images(const OpenArc& u, double x) {
  const bool lo_inf = !std::isfinite(u.lo);
  const bool hi_inf = !std::isfinite(u.hi);
  if (lo_inf && hi_inf) return {{1.0, x, 0.0}};
  if (lo_inf) return {{1.0, x, 0.0}, {-1.0, 2.0 * u.hi - x, 0.0}};
  if (hi_inf) return {{1.0, x, 0.0}, {-1.0, 2.0 * u.lo - x, 0.0}};
  return interval_images(u.lo, u.hi, x);
}

std::vector<ImageFamily> full_images(const Manifold1D& m, double x) {
  switch (m.kind()) {
    case ManifoldKind::Circle:
    case ManifoldKind::WeightedCircle: return {{1.0, x, m.circumference()}};
    case ManifoldKind::Line:
    case ManifoldKind::WeightedLine: return {{1.0, x, 0.0}};
    case ManifoldKind::DirichletInterval: return interval_images(m.lower(), m.upper(), x);
    case ManifoldKind::HyperbolicRadial3: break;
  }
  throw UnsupportedConfiguration("no image representation on " + m.id());
}

int series_terms(double rate, double margin) {
  return static_cast<int>(std::ceil(std::sqrt(std::max(margin / rate, 1.0)))) + 2;
}

}  // namespace

Jet killed_kernel(const Manifold1D& m, const OpenArc& u, double t, double x, double y, int n,
                  IntervalBackend backend) {
  require_drift_free(m, "killed kernel");
  if (!(t > 0.0)) throw ArgumentError("killed kernel: t must be > 0");
  const OpenArc set = effective_set(m, u);
  const double xl = lift_into(m, set, x);
  const double yl = lift_into(m, set, y);
  if (!inside(set, xl) || !inside(set, yl)) {
    throw DomainError("killed kernel: x and y must lie in the open set");
  }
  Jet out;
  if (std::isfinite(set.lo) && std::isfinite(set.hi)) {
    out = interval_series(Manifold1D::dirichlet_interval(set.lo, set.hi), t, xl, yl, n, backend).jet;
  } else {
    out = image_sum_jet(killed_images(set, xl), t, yl, n).jet;
  }
  out.center = {t, x, y};
  out.measure = Measure::Riemannian;
  return out;
}

std::optional<OpenArc> complement_component(const Manifold1D& m, const ClosedSet& a, double x) {
  if (a.empty()) throw ArgumentError("closed set A must be nonempty");
  if (m.is_periodic()) {
    const double L = m.circumference();
    double back = kInf;
    double fwd = kInf;
    for (const auto& arc : a) {
      if (arc.hi < arc.lo || arc.hi - arc.lo > L) throw ArgumentError("malformed arc in A");
      double off = std::fmod(x - arc.lo, L);
      if (off < 0.0) off += L;
      if (off <= arc.hi - arc.lo || arc.hi - arc.lo >= L) return std::nullopt;
      double b = std::fmod(x - arc.hi, L);
      if (b < 0.0) b += L;
      double f = std::fmod(arc.lo - x, L);
      if (f < 0.0) f += L;
      back = std::min(back, b);
      fwd = std::min(fwd, f);
    }
    return OpenArc{x - back, x + fwd};
  }
  double lo = -kInf;
  double hi = kInf;
  if (m.kind() == ManifoldKind::DirichletInterval) {
    lo = m.lower();
    hi = m.upper();
  }
  for (const auto& arc : a) {
    if (arc.hi < arc.lo) throw ArgumentError("malformed arc in A");
    if (x >= arc.lo && x <= arc.hi) return std::nullopt;
    if (arc.hi < x) lo = std::max(lo, arc.hi);
    if (arc.lo > x) hi = std::min(hi, arc.lo);
  }
  return OpenArc{lo, hi};
}

ThroughKernelValue through_kernel(const Manifold1D& m, const ClosedSet& a, double t, double x,
                                  double y) {
  require_drift_free(m, "through kernel");
  if (!(t > 0.0)) throw ArgumentError("through kernel: t must be > 0");
  m.require_contains(x, "x");
  m.require_contains(y, "y");
  for (const auto& arc : a) {
    m.require_contains(arc.lo, "A");
    if (!m.is_periodic()) m.require_contains(arc.hi, "A");
  }
  const auto comp = complement_component(m, a, x);
  ThroughKernelValue out;

  // Work in the lift around the component so that full and killed images share
  // one coordinate.
  OpenArc set = comp.value_or(OpenArc{x - 1.0, x + 1.0});
  if (comp) set = effective_set(m, set);
  const double xl = comp ? lift_into(m, set, x) : x;
  const double yl = comp ? lift_into(m, set, y) : m.nearest_lift(x, y);
  const bool killed_zero = !comp || !inside(set, yl) || !inside(set, xl);

  const auto full = full_images(m, xl);
  const LogValue lf = image_sum_log(full, t, yl);
  out.log_full = lf.log_value;
  out.full = std::exp(lf.log_value);
  if (killed_zero) {
    out.value = out.full;
    out.log_value = lf.log_value;
    out.error_bound = out.full * lf.log_error;
    return out;
  }
  const auto killed = killed_images(set, xl);
  const LogValue lk = image_sum_log(killed, t, yl);
  out.killed = std::exp(lk.log_value);
  const double ratio = std::exp(lk.log_value - lf.log_value);
  if (ratio <= kThroughCancellationRatio) {
    out.log_value = lf.log_value + std::log1p(-ratio);
    out.value = out.full * (1.0 - ratio);
    out.error_bound = out.full * lf.log_error + out.killed * lk.log_error;
    return out;
  }
  std::vector<ImageFamily> combined = full;
  for (auto f : killed) {
    f.weight = -f.weight;
    combined.push_back(f);
  }
  const LogValue lt = image_sum_log(combined, t, yl);
  out.cancelled = true;
  out.log_value = lt.log_value;
  out.value = std::exp(lt.log_value);
  out.error_bound = out.value * lt.log_error;
  return out;
}

double first_passage_density(double ell, double gap, double tau) {
  if (!(ell > 0.0) || gap < 0.0 || gap > ell) throw ArgumentError("first passage: bad geometry");
  if (tau <= 0.0) return 0.0;
  if (tau <= kIntervalImageThreshold * ell * ell) {
    const double reach = gap + std::sqrt(4.0 * tau * 60.0) + 2.0 * ell;
    const int mmax = static_cast<int>(std::ceil(reach / (2.0 * ell)));
    const double log_pref = -0.5 * std::log(4.0 * kPi) - 1.5 * std::log(tau);
    double sum = 0.0;
    for (int k = -mmax; k <= mmax; ++k) {
      const double s = gap + 2.0 * k * ell;
      sum += s * std::exp(log_pref - s * s / (4.0 * tau));
    }
    return sum;
  }
  const double xi = gap / ell;
  const double rate = kPi * kPi * tau / (ell * ell);
  const int kmax = series_terms(rate, 60.0);
  double sum = 0.0;
  for (int k = 1; k <= kmax; ++k) {
    sum += 2.0 * k * kPi / (ell * ell) * std::sin(k * kPi * xi) * std::exp(-rate * k * k);
  }
  return sum;
}

double first_passage_cumulative(double ell, double gap, double t) {
  if (!(ell > 0.0) || gap < 0.0 || gap > ell) throw ArgumentError("first passage: bad geometry");
  if (t <= 0.0) return 0.0;
  if (t <= kIntervalImageThreshold * ell * ell) {
    const double reach = gap + std::sqrt(4.0 * t * 60.0) + 2.0 * ell;
    const int mmax = static_cast<int>(std::ceil(reach / (2.0 * ell)));
    const double root = std::sqrt(4.0 * t);
    double pos = 0.0;
    double neg = 0.0;
    for (int k = -mmax; k <= mmax; ++k) {
      const double s = gap + 2.0 * k * ell;
      const double term = std::erfc(std::abs(s) / root);
      if (s > 0.0) pos += term;
      if (s < 0.0) neg += term;
    }
    return pos - neg;
  }
  const double xi = gap / ell;
  const double rate = kPi * kPi * t / (ell * ell);
  const int kmax = series_terms(rate, 60.0);
  double sum = 1.0 - xi;
  for (int k = 1; k <= kmax; ++k) {
    sum -= 2.0 / (k * kPi) * std::sin(k * kPi * xi) * std::exp(-rate * k * k);
  }
  return sum;
}

double survival_probability(double ell, double gap, double t) {
  if (!(ell > 0.0) || gap < 0.0 || gap > ell) throw ArgumentError("survival: bad geometry");
  if (t <= 0.0) return (gap > 0.0 && gap < ell) ? 1.0 : 0.0;
  if (t <= kIntervalImageThreshold * ell * ell) {
    return 1.0 - first_passage_cumulative(ell, gap, t) - first_passage_cumulative(ell, ell - gap, t);
  }
  const double xi = gap / ell;
  const double rate = kPi * kPi * t / (ell * ell);
  const int kmax = series_terms(rate, 60.0);
  double sum = 0.0;
  for (int k = 1; k <= kmax; k += 2) {
    sum += 4.0 / (k * kPi) * std::sin(k * kPi * xi) * std::exp(-rate * k * k);
  }
  return sum;
}

FirstPassageLaw first_passage_law(const Manifold1D& m, double x, const OpenArc& u,
                                  const std::vector<double>& tau_grid) {
  if (m.kind() != ManifoldKind::Line && m.kind() != ManifoldKind::DirichletInterval) {
    if (m.has_drift()) {
      throw UnsupportedConfiguration("first passage: closed forms exist only for drift-free models");
    }
    throw UnsupportedConfiguration("first passage: needs a line or Dirichlet interval");
  }
  if (!std::isfinite(u.lo) || !std::isfinite(u.hi) || !(u.hi > u.lo)) {
    throw ArgumentError("first passage: U must be a bounded interval");
  }
  if (m.kind() == ManifoldKind::DirichletInterval && (u.lo < m.lower() || u.hi > m.upper())) {
    throw DomainError("first passage: U must lie inside the interval");
  }
  if (!inside(u, x)) throw DomainError("first passage: x must lie in U");
  FirstPassageLaw law;
  law.lower = u.lo;
  law.upper = u.hi;
  law.tau = tau_grid;
  const double ell = u.length();
  double tmax = 0.0;
  for (double tau : tau_grid) {
    if (tau < 0.0) throw ArgumentError("first passage: negative time");
    law.density_lower.push_back(first_passage_density(ell, x - u.lo, tau));
    law.density_upper.push_back(first_passage_density(ell, u.hi - x, tau));
    tmax = std::max(tmax, tau);
  }
  law.mass_lower = first_passage_cumulative(ell, x - u.lo, tmax);
  law.mass_upper = first_passage_cumulative(ell, u.hi - x, tmax);
  return law;
}

DecompositionResult verify_decomposition(const Manifold1D& m, const OpenArc& u, double t, double x,
                                         double y) {
  if (!(t > 0.0)) throw ArgumentError("decomposition: t must be > 0");
  first_passage_law(m, x, u, {});  // geometry checks
  if (y < u.lo || y > u.hi) throw DomainError("decomposition: y must lie in the closure of U");
  const Kernel kernel = Kernel::for_manifold(m);
  auto full_at = [&](double s, double from, double to) -> double {
    if (!m.interior(from) || !m.interior(to)) return 0.0;
    return kernel.value(s, from, to);
  };

  DecompositionResult out;
  const bool on_boundary = (y == u.lo || y == u.hi);
  out.killed = on_boundary ? 0.0 : killed_kernel(m, u, t, x, y, 0)[0];
  out.full = full_at(t, x, y);

  const double ell = u.length();
  auto integrand = [&](double tau, double rem) {
    if (rem <= 0.0) return 0.0;
    double v = 0.0;
    const double fl = first_passage_density(ell, x - u.lo, tau);
    const double fu = first_passage_density(ell, u.hi - x, tau);
    if (fl != 0.0) v += fl * full_at(rem, u.lo, y);
    if (fu != 0.0) v += fu * full_at(rem, u.hi, y);
    return v;
  };
  boost::math::quadrature::tanh_sinh<double> quad(15);
  const double half = 0.5 * t;
  double err_left = 0.0;
  double err_right = 0.0;
  const double tol = 1e-14;
  const double left = quad.integrate(
      [&](double tau, double) { return integrand(tau, t - tau); }, 0.0, half, tol, &err_left);
  const double right = quad.integrate(
      [&](double tau, double tc) { return integrand(tau, tc > 0.0 ? tc : t - tau); }, half, t, tol,
      &err_right);
  out.hitting_integral = left + right;
  out.quadrature_error = err_left + err_right;
  if (!std::isfinite(out.hitting_integral) ||
      out.quadrature_error > 1e-9 * std::max(1.0, std::abs(out.hitting_integral))) {
    throw NumericalFailure("decomposition: hitting-integral quadrature did not converge (error " +
                           std::to_string(out.quadrature_error) + ")");
  }
  out.residual = std::abs(out.killed - (out.full - out.hitting_integral));
  return out;
}

ExitProbability exit_probability(const Manifold1D& m, double x, double a, double horizon,
                                 const ExitOptions& options) {
  if (!(a > 0.0)) throw ArgumentError("exit probability: radius must be > 0");
  if (horizon < 0.0) throw ArgumentError("exit probability: horizon must be >= 0");
  m.require_contains(x, "x");
  if (m.is_periodic() && a >= m.circumference() / 2.0) {
    throw ArgumentError("exit probability: ball must not cover the circle");
  }
  if (m.kind() == ManifoldKind::DirichletInterval && (x - a < m.lower() || x + a > m.upper())) {
    throw DomainError("exit probability: ball leaves the interval");
  }
  if (m.kind() == ManifoldKind::HyperbolicRadial3) {
    throw UnsupportedConfiguration("exit probability: not available on " + m.id());
  }
  ExitProbability out;
  if (horizon == 0.0) {
    out.method = "trivial";
    return out;
  }
  if (!m.has_drift()) {
    out.value = 2.0 * first_passage_cumulative(2.0 * a, a, horizon);
    out.method = "series";
    return out;
  }
  SimulationConfig cfg;
  cfg.manifold = m;
  cfg.x = x;
  cfg.t = horizon;
  cfg.dt = options.dt > 0.0 ? options.dt : horizon / 1000.0;
  cfg.paths = options.paths;
  cfg.seed = options.seed;
  cfg.bridge_correction = options.bridge_correction;
  cfg.threads = options.threads;
  const Estimate e = mc_exit_probability(cfg, a);
  out.value = e.value;
  out.standard_error = e.standard_error;
  out.exact = false;
  out.method = "monte-carlo";
  return out;
}

ExitHorizon exit_horizon(const Manifold1D& m, const std::vector<double>& starts, double a,
                         double t_max, const ExitOptions& options, int refinements) {
  if (starts.empty()) throw ArgumentError("exit horizon: no start points");
  if (!(t_max > 0.0)) throw ArgumentError("exit horizon: t_max must be > 0");
  ExitHorizon out;
  out.starts = starts;
  auto upper_at = [&](double horizon) {
    std::vector<double> up;
    for (double x : starts) {
      const ExitProbability p = exit_probability(m, x, a, horizon, options);
      up.push_back(p.value + kExitSigma * p.standard_error);
      ++out.evaluations;
    }
    return up;
  };
  auto passes = [](const std::vector<double>& up) {
    return std::all_of(up.begin(), up.end(), [](double v) { return v < 0.5; });
  };
  double good = t_max;
  auto up = upper_at(good);
  int halvings = 0;
  while (!passes(up)) {
    if (++halvings > 30) return out;
    good *= 0.5;
    up = upper_at(good);
  }
  out.found = true;
  out.horizon = good;
  out.upper = up;
  if (halvings == 0) return out;
  double bad = 2.0 * good;
  for (int i = 0; i < refinements; ++i) {
    const double mid = std::sqrt(good * bad);
    auto trial = upper_at(mid);
    if (passes(trial)) {
      good = mid;
      out.horizon = mid;
      out.upper = trial;
    } else {
      bad = mid;
    }
  }
  return out;
}

Fit2 weighted_fit(const std::vector<double>& f1, const std::vector<double>& f2,
                  const std::vector<double>& y, const std::vector<double>& w) {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    a11 += w[i] * f1[i] * f1[i];
    a12 += w[i] * f1[i] * f2[i];
    a22 += w[i] * f2[i] * f2[i];
    b1 += w[i] * f1[i] * y[i];
    b2 += w[i] * f2[i] * y[i];
  }
  const double det = a11 * a22 - a12 * a12;
  if (!(std::abs(det) > 1e-300)) throw NumericalFailure("fit: singular normal equations");
  return {(b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det};
}

std::vector<std::size_t> small_time_tail(const std::vector<double>& t) {
  std::vector<std::size_t> idx(t.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
  if (idx.empty()) return idx;
  const double cut = std::sqrt(t[idx.front()] * t[idx.back()]) * (1.0 + 1e-12);
  std::size_t keep = 0;
  while (keep < idx.size() && t[idx[keep]] <= cut) ++keep;
  idx.resize(std::min(idx.size(), std::max<std::size_t>(keep, 3)));
  return idx;
}

RateReport rate_through(const Manifold1D& m, const ClosedSet& a, double x, double y,
                        const std::vector<double>& t_grid, double tolerance) {
  if (t_grid.size() < 3) throw ArgumentError("rate: need at least three grid times");
  for (double t : t_grid) {
    if (!(t > 0.0) || t > 0.1) throw ArgumentError("rate: grid times must lie in (0, 0.1]");
  }
  RateReport rep;
  rep.tolerance = tolerance;
  rep.distance_via = distance_via(m, x, a, y);
  const double d2 = rep.distance_via * rep.distance_via;
  std::vector<double> f1;
  std::vector<double> f2;
  std::vector<double> w;
  for (double t : t_grid) {
    double log_value = 0.0;
    try {
      log_value = through_kernel(m, a, t, x, y).log_value;
    } catch (const NumericalFailure&) {
      ++rep.truncated;
      continue;
    }
    if (!std::isfinite(log_value)) {
      ++rep.truncated;
      continue;
    }
    rep.t.push_back(t);
    rep.rate.push_back(4.0 * t * log_value + d2);
    f1.push_back(t * std::log(1.0 / t));
    f2.push_back(t);
    w.push_back(1.0 / t);
  }
  if (rep.t.size() < 3) throw NumericalFailure("rate: fewer than three usable grid points");
  const auto tail = small_time_tail(rep.t);
  std::vector<double> tf1;
  std::vector<double> tf2;
  std::vector<double> tr;
  std::vector<double> tw;
  for (std::size_t i : tail) {
    tf1.push_back(f1[i]);
    tf2.push_back(f2[i]);
    tr.push_back(rep.rate[i]);
    tw.push_back(w[i]);
  }
  const Fit2 fit = weighted_fit(tf1, tf2, tr, tw);
  rep.c1 = fit.c1;
  rep.c2 = fit.c2;
  rep.tail_size = tail.size();
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    rep.envelope.push_back(fit.c1 * f1[i] + fit.c2 * f2[i]);
    rep.residual.push_back(rep.rate[i] - rep.envelope[i]);
  }
  rep.pass = std::abs(rep.residual[tail.front()]) <= tolerance;
  for (std::size_t i : tail) rep.pass = rep.pass && rep.residual[i] <= tolerance;
  return rep;
}

}  // namespace heatlab
