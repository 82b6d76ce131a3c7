#include "heatlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"

namespace heatlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = std::numbers::pi;

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("heat kernel: t must be > 0");
}

void check_order(int n) {
  if (n < 0 || n > 24) throw ArgumentError("heat kernel: order must lie in [0, 24]");
}

void require_kind(const Manifold1D& m, std::initializer_list<ManifoldKind> kinds,
                  const char* kernel) {
  for (auto k : kinds) {
    if (m.kind() == k) return;
  }
  throw UnsupportedConfiguration(std::string("kernel '") + kernel + "' does not apply to " +
                                 m.id());
}

void require_no_drift(const Manifold1D& m, const char* kernel) {
  if (m.has_drift()) {
    throw UnsupportedConfiguration(std::string("kernel '") + kernel +
                                   "' needs a zero potential on " + m.id());
  }
}

void stamp(Jet& j, double t, double x, double y, Measure measure = Measure::Riemannian) {
  j.center = {t, x, y};
  j.measure = measure;
}

// Upper bound on sum_{k > first} k^d exp(-c k^2), a log-concave sequence.
double eigen_tail(int first, double c, int d) {
  auto term = [&](double k) { return std::pow(k, d) * std::exp(-c * k * k); };
  double sum = 0.0;
  int k = first + 1;
  for (int guard = 0; guard < 1000000; ++guard, ++k) {
    const double a = term(k);
    const double b = term(k + 1);
    if (a == 0.0) return sum;
    if (b < a) return sum + a / (1.0 - b / a);
    sum += a;
  }
  return std::numeric_limits<double>::infinity();
}

SeriesJet interval_eigen(double a, double b, double t, double x, double y, int n, int cutoff) {
  const double ell = b - a;
  const double c = kPi * kPi * t / (ell * ell);
  int modes = cutoff;
  if (modes <= 0) {
    const double margin = 40.0 + 3.0 * n;
    modes = static_cast<int>(std::ceil(std::sqrt(1.0 + margin / c)));
    while (c * (static_cast<double>(modes) * modes - 1.0) - n * std::log(modes) < margin) ++modes;
  }
  SeriesJet out;
  out.jet.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.jet.error_bounds.assign(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> magnitude(out.jet.values.size(), 0.0);
  for (int k = 1; k <= modes; ++k) {
    const double w = k * kPi / ell;
    const double amp = 2.0 / ell * std::sin(w * (x - a)) * std::exp(-w * w * t);
    double wp = 1.0;
    for (int d = 0; d <= n; ++d) {
      const double v = amp * wp * std::sin(w * (y - a) + d * kPi / 2.0);
      out.jet.values[d] += v;
      magnitude[d] += std::abs(v);
      wp *= w;
    }
  }
  out.truncation.cutoff = modes;
  out.truncation.tail_bound.resize(out.jet.values.size());
  for (int d = 0; d <= n; ++d) {
    out.truncation.tail_bound[d] = 2.0 / ell * std::pow(kPi / ell, d) * eigen_tail(modes, c, d);
    out.jet.error_bounds[d] =
        (modes + 8.0) * kEps * magnitude[d] + out.truncation.tail_bound[d];
  }
  return out;
}

Jet mehler_log_jet(const LinearDiffusion& law, double y, int n) {
  Jet out = Jet::constant(0.0, n);
  const double s = y - law.mean;
  out.values[0] = -0.5 * std::log(2.0 * kPi * law.variance) - s * s / (2.0 * law.variance);
  if (n >= 1) out.values[1] = -s / law.variance;
  if (n >= 2) out.values[2] = -1.0 / law.variance;
  for (int k = 0; k <= std::min(n, 2); ++k) {
    out.error_bounds[k] = 8.0 * kEps * std::abs(out.values[k]) + kEps;
  }
  return out;
}

// Derivatives of log r.
Jet log_r_jet(double r, int n) {
  Jet out = Jet::constant(std::log(r), n);
  double fact = 1.0;
  for (int k = 1; k <= n; ++k) {
    out.values[k] = ((k % 2 == 1) ? 1.0 : -1.0) * fact / std::pow(r, k);
    fact *= k;
  }
  for (int k = 0; k <= n; ++k) out.error_bounds[k] = 4.0 * kEps * std::abs(out.values[k]);
  return out;
}

Jet flip(Jet j, double sign) {
  if (sign < 0.0) {
    for (std::size_t k = 1; k < j.values.size(); k += 2) j.values[k] = -j.values[k];
  }
  return j;
}

}  // namespace

const char* to_string(KernelId id) {
  switch (id) {
    case KernelId::Theta: return "theta";
    case KernelId::Gauss: return "gauss";
    case KernelId::Interval: return "interval";
    case KernelId::Mehler: return "mehler";
    case KernelId::H3: return "h3";
    case KernelId::Spectral: return "spectral";
  }
  return "unknown";
}

KernelId parse_kernel_id(const std::string& name) {
  for (auto id : {KernelId::Theta, KernelId::Gauss, KernelId::Interval, KernelId::Mehler,
                  KernelId::H3, KernelId::Spectral}) {
    if (name == to_string(id)) return id;
  }
  throw ConfigError("unknown kernel backend '" + name + "'");
}

KernelId default_kernel(const Manifold1D& m) {
  switch (m.kind()) {
    case ManifoldKind::Circle: return KernelId::Theta;
    case ManifoldKind::Line: return KernelId::Gauss;
    case ManifoldKind::DirichletInterval: return KernelId::Interval;
    case ManifoldKind::WeightedLine:
      if (m.potential().degree(false) > 2) {
        throw UnsupportedConfiguration(
            "weighted line: only potentials of degree <= 2 have a closed-form kernel");
      }
      return KernelId::Mehler;
    case ManifoldKind::WeightedCircle:
      return m.has_drift() ? KernelId::Spectral : KernelId::Theta;
    case ManifoldKind::HyperbolicRadial3: return KernelId::H3;
  }
  throw UnsupportedConfiguration("no kernel for " + m.id());
}

SeriesJet theta_series(const Manifold1D& circle, double t, double x, double y, int n,
                       double radius) {
  require_kind(circle, {ManifoldKind::Circle, ManifoldKind::WeightedCircle}, "theta");
  require_no_drift(circle, "theta");
  check_time(t);
  check_order(n);
  const ImageFamily fam[] = {{1.0, x, circle.circumference()}};
  SeriesJet out = image_sum_jet(fam, t, y, n, radius);
  stamp(out.jet, t, x, y);
  return out;
}

Jet theta_kernel_jet(const Manifold1D& circle, double t, double x, double y, int n) {
  return theta_series(circle, t, x, y, n).jet;
}

Jet gauss_kernel_jet(const Manifold1D& line, double t, double x, double y, int n) {
  require_kind(line, {ManifoldKind::Line, ManifoldKind::WeightedLine}, "gauss");
  require_no_drift(line, "gauss");
  check_time(t);
  check_order(n);
  Jet out = gaussian_density_jet(x, 2.0 * t, y, n);
  stamp(out, t, x, y);
  return out;
}

std::vector<ImageFamily> interval_images(double a, double b, double x) {
  const double period = 2.0 * (b - a);
  return {{1.0, x, period}, {-1.0, 2.0 * a - x, period}};
}

SeriesJet interval_series(const Manifold1D& interval, double t, double x, double y, int n,
                          IntervalBackend backend, double cutoff) {
  require_kind(interval, {ManifoldKind::DirichletInterval}, "interval");
  check_time(t);
  check_order(n);
  const double a = interval.lower();
  const double b = interval.upper();
  for (double u : {x, y}) {
    if (!interval.interior(u)) {
      throw DomainError("interval kernel: point " + std::to_string(u) +
                        " is not inside the open interval " + interval.id());
    }
  }
  const double ell = b - a;
  if (backend == IntervalBackend::Auto) {
    backend = t <= kIntervalImageThreshold * ell * ell ? IntervalBackend::Images
                                                      : IntervalBackend::Eigen;
  }
  SeriesJet out;
  if (backend == IntervalBackend::Eigen) {
    out = interval_eigen(a, b, t, x, y, n, static_cast<int>(cutoff));
  } else {
    const auto fams = interval_images(a, b, x);
    out = image_sum_jet(fams, t, y, n, cutoff > 0.0 ? cutoff * 2.0 * ell : 0.0);
  }
  stamp(out.jet, t, x, y);
  return out;
}

Jet interval_kernel_jet(const Manifold1D& interval, double t, double x, double y, int n,
                        IntervalBackend backend) {
  return interval_series(interval, t, x, y, n, backend).jet;
}

LinearDiffusion weighted_line_law(const Manifold1D& m, double t, double x) {
  require_kind(m, {ManifoldKind::Line, ManifoldKind::WeightedLine}, "mehler");
  check_time(t);
  const auto& c = m.potential().coeffs;
  if (m.potential().degree(false) > 2) {
    throw UnsupportedConfiguration(
        "weighted line: only potentials of degree <= 2 have a closed-form kernel");
  }
  const double c1 = c.size() > 1 ? c[1] : 0.0;
  const double c2 = c.size() > 2 ? c[2] : 0.0;
  // dX = (c1 - kappa X) ds + sqrt(2) dW
  const double kappa = -2.0 * c2;
  auto phi = [&](double rate) { return rate == 0.0 ? t : -std::expm1(-rate * t) / rate; };
  LinearDiffusion law;
  law.mean = x * std::exp(-kappa * t) + c1 * phi(kappa);
  law.variance = 2.0 * phi(2.0 * kappa);
  return law;
}

Jet weighted_line_kernel_jet(const Manifold1D& m, double t, double x, double y, int n) {
  check_order(n);
  const auto law = weighted_line_law(m, t, x);
  Jet out = gaussian_density_jet(law.mean, law.variance, y, n);
  stamp(out, t, x, y);
  return out;
}

Jet hyperbolic3_radial_log_jet(const Manifold1D& m, double t, double r, int n) {
  require_kind(m, {ManifoldKind::HyperbolicRadial3}, "h3");
  check_time(t);
  check_order(n);
  if (!(r > 0.0) || !std::isfinite(r)) throw ArgumentError("h3 kernel: r must be > 0");
  // log p = -3/2 log(4 pi t) - t - r^2/4t + log r - log sinh r
  Jet sinh_jet = Jet::constant(0.0, n);
  for (int k = 0; k <= n; ++k) {
    sinh_jet.values[k] = (k % 2 == 0) ? std::sinh(r) : std::cosh(r);
    sinh_jet.error_bounds[k] = 2.0 * kEps * std::abs(sinh_jet.values[k]);
  }
  Jet out = jet_sum(log_r_jet(r, n), jet_scaled(log_jet(sinh_jet), -1.0));
  out.values[0] += -1.5 * std::log(4.0 * kPi * t) - t - r * r / (4.0 * t);
  if (n >= 1) out.values[1] += -r / (2.0 * t);
  if (n >= 2) out.values[2] += -1.0 / (2.0 * t);
  out.error_bounds[0] += 4.0 * kEps * (std::abs(out.values[0]) + r * r / (4.0 * t));
  stamp(out, t, 0.0, r);
  return out;
}

Jet hyperbolic3_radial_jet(const Manifold1D& m, double t, double r, int n) {
  Jet out = exp_jet(hyperbolic3_radial_log_jet(m, t, r, n));
  stamp(out, t, 0.0, r);
  return out;
}

Kernel::Kernel(Manifold1D m, KernelId id, int grid_size)
    : m_(std::move(m)), id_(id), grid_size_(grid_size) {
  if (!m_.metric().is_flat()) {
    throw UnsupportedConfiguration("kernels need a flat metric density");
  }
  switch (id_) {
    case KernelId::Theta:
      require_kind(m_, {ManifoldKind::Circle, ManifoldKind::WeightedCircle}, "theta");
      require_no_drift(m_, "theta");
      break;
    case KernelId::Gauss:
      require_kind(m_, {ManifoldKind::Line, ManifoldKind::WeightedLine}, "gauss");
      require_no_drift(m_, "gauss");
      break;
    case KernelId::Interval:
      require_kind(m_, {ManifoldKind::DirichletInterval}, "interval");
      break;
    case KernelId::Mehler:
      require_kind(m_, {ManifoldKind::Line, ManifoldKind::WeightedLine}, "mehler");
      if (m_.potential().degree(false) > 2) {
        throw UnsupportedConfiguration(
            "weighted line: only potentials of degree <= 2 have a closed-form kernel");
      }
      break;
    case KernelId::H3: require_kind(m_, {ManifoldKind::HyperbolicRadial3}, "h3"); break;
    case KernelId::Spectral:
      require_kind(m_, {ManifoldKind::Circle, ManifoldKind::WeightedCircle}, "spectral");
      if (grid_size_ < 64 || (grid_size_ & (grid_size_ - 1)) != 0) {
        throw ArgumentError("spectral: grid size must be a power of two >= 64");
      }
      break;
  }
}

Kernel Kernel::with_series_scale(double scale) const {
  if (!(scale >= 1.0)) throw ArgumentError("series scale must be >= 1");
  Kernel k = *this;
  k.series_scale_ = scale;
  return k;
}

Kernel Kernel::for_manifold(const Manifold1D& m, int grid_size) {
  return Kernel(m, default_kernel(m), grid_size);
}

std::string Kernel::describe() const {
  std::string s = std::string(to_string(id_)) + " on " + m_.id();
  if (id_ == KernelId::Spectral) s += " (n=" + std::to_string(grid_size_) + ")";
  return s;
}

Jet Kernel::y_jet(double t, double x, double y, int n) const {
  switch (id_) {
    case KernelId::Theta: {
      if (series_scale_ == 1.0) return theta_kernel_jet(m_, t, x, y, n);
      const ImageFamily fam[] = {{1.0, x, m_.circumference()}};
      return theta_series(m_, t, x, y, n, series_scale_ * auto_image_radius(fam, t, y, n)).jet;
    }
    case KernelId::Gauss: return gauss_kernel_jet(m_, t, x, y, n);
    case KernelId::Interval: {
      if (series_scale_ == 1.0) return interval_kernel_jet(m_, t, x, y, n);
      const double ell = m_.upper() - m_.lower();
      if (t <= kIntervalImageThreshold * ell * ell) {
        const auto fams = interval_images(m_.lower(), m_.upper(), x);
        const double radius = series_scale_ * auto_image_radius(fams, t, y, n);
        return interval_series(m_, t, x, y, n, IntervalBackend::Images, radius / (2.0 * ell)).jet;
      }
      const int modes =
          interval_series(m_, t, x, y, n, IntervalBackend::Eigen).truncation.cutoff;
      return interval_series(m_, t, x, y, n, IntervalBackend::Eigen,
                             std::ceil(series_scale_ * modes)).jet;
    }
    case KernelId::Mehler: return weighted_line_kernel_jet(m_, t, x, y, n);
    case KernelId::H3: {
      Jet j = flip(hyperbolic3_radial_jet(m_, t, std::abs(y - x), n), y - x);
      stamp(j, t, x, y);
      return j;
    }
    case KernelId::Spectral: return spectral_kernel_jet(m_, grid_size_, t, x, y, n);
  }
  throw UnsupportedConfiguration("unknown kernel");
}

double Kernel::value(double t, double x, double y) const { return y_jet(t, x, y, 0)[0]; }

double Kernel::log_value(double t, double x, double y) const {
  return y_log_jet(t, x, y, 0)[0];
}

Jet Kernel::y_log_jet(double t, double x, double y, int n) const {
  Jet out;
  switch (id_) {
    case KernelId::Theta: {
      check_time(t);
      const ImageFamily fam[] = {{1.0, x, m_.circumference()}};
      const double radius =
          series_scale_ == 1.0 ? 0.0 : series_scale_ * auto_image_radius(fam, t, y, n);
      out = image_sum_log_jet(fam, t, y, n, radius);
      break;
    }
    case KernelId::Gauss: {
      check_time(t);
      out = mehler_log_jet({x, 2.0 * t}, y, n);
      break;
    }
    case KernelId::Interval: {
      const double ell = m_.upper() - m_.lower();
      if (t <= kIntervalImageThreshold * ell * ell) {
        interval_series(m_, t, x, y, 0, IntervalBackend::Images);  // domain checks
        const auto fams = interval_images(m_.lower(), m_.upper(), x);
        const double radius =
            series_scale_ == 1.0 ? 0.0 : series_scale_ * auto_image_radius(fams, t, y, n);
        out = image_sum_log_jet(fams, t, y, n, radius);
      } else {
        out = log_jet(y_jet(t, x, y, n));
      }
      break;
    }
    case KernelId::Mehler: out = mehler_log_jet(weighted_line_law(m_, t, x), y, n); break;
    case KernelId::H3:
      out = flip(hyperbolic3_radial_log_jet(m_, t, std::abs(y - x), n), y - x);
      break;
    case KernelId::Spectral: out = log_jet(spectral_kernel_jet(m_, grid_size_, t, x, y, n)); break;
  }
  stamp(out, t, x, y);
  return out;
}

Jet Kernel::x_log_jet(double t, double x, double y, int n) const {
  // p_mu(x, y) = p_nu(y, x) e^{f(y)}, and p_nu(y, .) = p_mu(y, .) e^{-f(.)}.
  Jet out = y_log_jet(t, y, x, n);
  if (m_.has_drift()) {
    Jet f = m_.potential_jet(x, n);
    out = jet_sum(out, jet_scaled(f, -1.0));
    out.values[0] += m_.potential_value(y);
  }
  stamp(out, t, x, y);
  return out;
}

Residual pde_residual(const Manifold1D& m, KernelId id, double t, double x, double y) {
  return pde_residual(Kernel(m, id), t, x, y);
}

Residual pde_residual(const Kernel& kernel, double t, double x, double y) {
  check_time(t);
  const Manifold1D& m = kernel.manifold();
  Residual out;
  if (kernel.id() == KernelId::H3) {
    const double r = std::abs(y - x);
    if (!(r > 0.0)) throw ArgumentError("h3 residual: r must be > 0");
    auto p = [&](double tt, double rr) { return hyperbolic3_radial_jet(m, tt, rr, 0)[0]; };
    const double hr = 0.25 * std::min({std::sqrt(t), r, 1.0});
    const auto dt = ridders([&](double tt) { return p(tt, r); }, t, 0.25 * t, 1);
    const auto dr = ridders([&](double rr) { return p(t, rr); }, r, hr, 1);
    const auto drr = ridders([&](double rr) { return p(t, rr); }, r, hr, 2);
    const double coth = 1.0 / std::tanh(r);
    out.value = dt.value - (drr.value + 2.0 * coth * dr.value);
    out.error_estimate = dt.error + drr.error + 2.0 * coth * dr.error;
    return out;
  }
  m.require_contains(x, "x");
  m.require_contains(y, "y");
  double hx = 0.25 * std::min(std::sqrt(t), 1.0);
  if (m.kind() == ManifoldKind::DirichletInterval) {
    if (!m.interior(x) || !m.interior(y)) {
      throw DomainError("pde residual: points must be interior");
    }
    hx = std::min(hx, 0.5 * std::min(x - m.lower(), m.upper() - x));
  }
  const auto dt = ridders([&](double tt) { return kernel.value(tt, x, y); }, t, 0.25 * t, 1);
  const auto dx = ridders([&](double xx) { return kernel.value(t, xx, y); }, x, hx, 1);
  const auto dxx = ridders([&](double xx) { return kernel.value(t, xx, y); }, x, hx, 2);
  const double z = m.drift(x);
  out.value = dt.value - (dxx.value + z * dx.value);
  out.error_estimate = dt.error + dxx.error + std::abs(z) * dx.error;
  return out;
}

}  // namespace heatlab
