#include "heatlab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"

namespace heatlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double poly_derivative(const std::vector<double>& c, double u, int k) {
  double acc = 0.0;
  for (int i = static_cast<int>(c.size()) - 1; i >= k; --i) {
    double falling = 1.0;
    for (int j = 0; j < k; ++j) falling *= (i - j);
    acc = acc * u + c[i] * falling;
  }
  return acc;
}

}  // namespace

const char* to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::Line: return "line";
    case ManifoldKind::DirichletInterval: return "interval";
    case ManifoldKind::WeightedLine: return "weighted-line";
    case ManifoldKind::WeightedCircle: return "weighted-circle";
    case ManifoldKind::HyperbolicRadial3: return "h3";
  }
  return "unknown";
}

ManifoldKind parse_manifold_kind(const std::string& name) {
  for (auto k : {ManifoldKind::Circle, ManifoldKind::Line, ManifoldKind::DirichletInterval,
                 ManifoldKind::WeightedLine, ManifoldKind::WeightedCircle,
                 ManifoldKind::HyperbolicRadial3}) {
    if (name == to_string(k)) return k;
  }
  if (name == "dirichlet-interval") return ManifoldKind::DirichletInterval;
  if (name == "hyperbolic3" || name == "hyperbolic-radial3") return ManifoldKind::HyperbolicRadial3;
  throw ConfigError("unknown manifold kind '" + name + "'");
}

bool Potential::is_zero() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; });
}

int Potential::degree(bool periodic) const {
  int last = -1;
  for (int i = 0; i < static_cast<int>(coeffs.size()); ++i) {
    if (coeffs[i] != 0.0) last = i;
  }
  if (last < 0) return 0;
  return periodic ? (last + 1) / 2 : last;
}

bool MetricDensity::is_flat() const {
  if (exp_rate != 0.0 || poly.empty()) return false;
  for (std::size_t i = 1; i < poly.size(); ++i) {
    if (poly[i] != 0.0) return false;
  }
  return poly[0] == 1.0;
}

Manifold1D Manifold1D::circle(double length) {
  Manifold1D m;
  m.kind_ = ManifoldKind::Circle;
  m.length_ = length;
  m.validate();
  return m;
}

Manifold1D Manifold1D::line() {
  Manifold1D m;
  m.kind_ = ManifoldKind::Line;
  return m;
}

Manifold1D Manifold1D::dirichlet_interval(double a, double b) {
  Manifold1D m;
  m.kind_ = ManifoldKind::DirichletInterval;
  m.a_ = a;
  m.b_ = b;
  m.validate();
  return m;
}

Manifold1D Manifold1D::weighted_line(Potential f) {
  Manifold1D m;
  m.kind_ = ManifoldKind::WeightedLine;
  m.potential_ = std::move(f);
  m.validate();
  return m;
}

Manifold1D Manifold1D::weighted_circle(double length, Potential f) {
  Manifold1D m;
  m.kind_ = ManifoldKind::WeightedCircle;
  m.length_ = length;
  m.potential_ = std::move(f);
  m.validate();
  return m;
}

Manifold1D Manifold1D::hyperbolic_radial3() {
  Manifold1D m;
  m.kind_ = ManifoldKind::HyperbolicRadial3;
  return m;
}

Manifold1D Manifold1D::with_metric(MetricDensity g) const {
  Manifold1D m = *this;
  m.metric_ = std::move(g);
  m.validate();
  return m;
}

void Manifold1D::validate() const {
  if (is_periodic() && !(length_ > 0.0 && std::isfinite(length_))) {
    throw ConfigError("circle circumference must be positive, got " + fmt(length_));
  }
  if (kind_ == ManifoldKind::DirichletInterval && !(a_ < b_)) {
    throw ConfigError("Dirichlet interval requires a < b");
  }
  for (double c : potential_.coeffs) {
    if (!std::isfinite(c)) throw ConfigError("potential coefficients must be finite");
  }
  if (metric_.poly.empty()) throw ConfigError("metric polynomial must be nonempty");
  if (is_periodic() && !metric_.is_flat()) {
    bool constant = metric_.exp_rate == 0.0;
    for (std::size_t i = 1; i < metric_.poly.size(); ++i) constant = constant && metric_.poly[i] == 0.0;
    if (!constant) throw ConfigError("metric density on a circle must be L-periodic (constant)");
  }
  // Positivity of g on the domain, sampled on a window covering the domain.
  const double lo = kind_ == ManifoldKind::DirichletInterval ? a_ : (is_periodic() ? 0.0 : -100.0);
  const double hi = kind_ == ManifoldKind::DirichletInterval ? b_ : (is_periodic() ? length_ : 100.0);
  for (int i = 0; i <= 4000; ++i) {
    const double u = lo + (hi - lo) * i / 4000.0;
    if (!(poly_derivative(metric_.poly, u, 0) > 0.0)) {
      throw ConfigError("metric density must be positive on the domain");
    }
  }
}

bool Manifold1D::is_periodic() const {
  return kind_ == ManifoldKind::Circle || kind_ == ManifoldKind::WeightedCircle;
}

bool Manifold1D::is_compact() const { return is_periodic(); }

int Manifold1D::dimension() const { return kind_ == ManifoldKind::HyperbolicRadial3 ? 3 : 1; }

bool Manifold1D::contains(double u) const {
  if (!std::isfinite(u)) return false;
  if (kind_ == ManifoldKind::DirichletInterval) return u >= a_ && u <= b_;
  return true;
}

bool Manifold1D::interior(double u) const {
  if (!std::isfinite(u)) return false;
  if (kind_ == ManifoldKind::DirichletInterval) return u > a_ && u < b_;
  return true;
}

void Manifold1D::require_contains(double u, const char* what) const {
  if (!contains(u)) {
    throw DomainError(std::string(what) + " = " + fmt(u) + " lies outside the domain of " + id());
  }
}

double Manifold1D::normalize(double u) const {
  if (!is_periodic()) return u;
  double r = std::fmod(u, length_);
  if (r < 0.0) r += length_;
  if (r >= length_) r -= length_;
  return r;
}

double Manifold1D::nearest_lift(double x, double y) const {
  if (!is_periodic()) return y;
  return x + std::remainder(y - x, length_);
}

double Manifold1D::potential_value(double u) const { return potential_jet(u, 0)[0]; }

Jet Manifold1D::potential_jet(double u, int n) const {
  Jet out = Jet::constant(0.0, n);
  const auto& c = potential_.coeffs;
  if (c.empty()) return out;
  if (is_periodic()) {
    out.values[0] = c[0];
    for (std::size_t i = 1; i < c.size(); ++i) {
      const int k = static_cast<int>((i + 1) / 2);
      const bool is_cos = (i % 2 == 1);
      const double w = kTwoPi * k / length_;
      const double phase = w * u;
      for (int d = 0; d <= n; ++d) {
        // d-th derivative of cos(w u) is w^d cos(w u + d pi/2), same for sin.
        const double shift = d * std::numbers::pi / 2.0;
        const double v = is_cos ? std::cos(phase + shift) : std::sin(phase + shift);
        out.values[d] += c[i] * std::pow(w, d) * v;
      }
    }
  } else {
    for (int d = 0; d <= n; ++d) out.values[d] = poly_derivative(c, u, d);
  }
  return out;
}

double Manifold1D::drift(double u) const {
  if (potential_.coeffs.empty()) return 0.0;
  return potential_jet(u, 1)[1];
}

Jet Manifold1D::metric_jet(double u, int n) const {
  Jet poly = Jet::constant(0.0, n);
  for (int d = 0; d <= n; ++d) poly.values[d] = poly_derivative(metric_.poly, u, d);
  Jet ex = Jet::constant(0.0, n);
  const double e = std::exp(metric_.exp_rate * u);
  for (int d = 0; d <= n; ++d) ex.values[d] = std::pow(metric_.exp_rate, d) * e;
  return jet_product(poly, ex);
}

std::string Manifold1D::id() const {
  switch (kind_) {
    case ManifoldKind::Circle: return "circle(L=" + fmt(length_) + ")";
    case ManifoldKind::Line: return "line";
    case ManifoldKind::DirichletInterval: return "interval(" + fmt(a_) + "," + fmt(b_) + ")";
    case ManifoldKind::WeightedLine: return "weighted-line";
    case ManifoldKind::WeightedCircle: return "weighted-circle(L=" + fmt(length_) + ")";
    case ManifoldKind::HyperbolicRadial3: return "h3";
  }
  return "unknown";
}

std::string Manifold1D::fingerprint() const {
  std::ostringstream os;
  os << std::setprecision(17) << to_string(kind_) << '|' << length_ << '|' << a_ << '|' << b_ << "|f";
  for (double c : potential_.coeffs) os << ',' << c;
  os << "|g";
  for (double c : metric_.poly) os << ',' << c;
  os << ',' << metric_.exp_rate;
  return os.str();
}

double distance(const Manifold1D& m, double x, double y) {
  m.require_contains(x, "x");
  m.require_contains(y, "y");
  if (m.is_periodic()) {
    const double L = m.circumference();
    double r = std::fmod(std::abs(x - y), L);
    return std::min(r, L - r);
  }
  return std::abs(x - y);
}

namespace {

double via_cost(const Manifold1D& m, double x, double z, double y) {
  return distance(m, x, z) + distance(m, z, y);
}

void validate_arc(const Manifold1D& m, const Arc& arc) {
  if (!(arc.lo <= arc.hi) || !std::isfinite(arc.lo) || !std::isfinite(arc.hi)) {
    throw ArgumentError("closed set arcs need finite lo <= hi");
  }
  if (m.is_periodic() && arc.hi - arc.lo > m.circumference()) {
    throw ArgumentError("circle arcs must have length at most L");
  }
  m.require_contains(arc.lo, "arc endpoint");
  m.require_contains(arc.hi, "arc endpoint");
}

}  // namespace

double distance_via(const Manifold1D& m, double x, const ClosedSet& set, double y) {
  if (set.empty()) throw ArgumentError("distance_via: closed set A is empty");
  m.require_contains(x, "x");
  m.require_contains(y, "y");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& arc : set) {
    validate_arc(m, arc);
    // The cost z -> d(x,z) + d(z,y) is piecewise linear; its minimum over the
    // arc sits at an endpoint or at a kink inside the arc.
    std::vector<double> candidates{arc.lo, arc.hi};
    if (m.is_periodic()) {
      const double L = m.circumference();
      for (double kink : {x, x + L / 2.0, y, y + L / 2.0}) {
        const double k0 = arc.lo + std::fmod(std::fmod(kink - arc.lo, L) + L, L);
        for (double k = k0; k <= arc.hi; k += L) candidates.push_back(k);
      }
    } else {
      candidates.push_back(std::clamp(x, arc.lo, arc.hi));
      candidates.push_back(std::clamp(y, arc.lo, arc.hi));
    }
    for (double z : candidates) best = std::min(best, via_cost(m, x, z, y));
  }
  return best;
}

bool is_cut_pair(const Manifold1D& m, double x, double y) {
  if (!m.is_periodic()) return false;
  return std::abs(distance(m, x, y) - m.circumference() / 2.0) <= kCutLocusTolerance;
}

double distance_to_cut_locus(const Manifold1D& m, double x, double y) {
  if (!m.is_periodic()) return std::numeric_limits<double>::infinity();
  return m.circumference() / 2.0 - distance(m, x, y);
}

MidpointMeasure midpoint_measure(const Manifold1D& m, double x, double y, int n) {
  if (n < 1) throw ArgumentError("midpoint_measure: order must be >= 1");
  const double d = distance(m, x, y);
  if (d == 0.0) throw DegeneratePairError("midpoint_measure: x == y has no geodesic midpoints");

  MidpointMeasure out;
  out.x = x;
  out.y = y;
  out.distance = d;
  auto variables = [n](double first) {
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    v[0] = first;  // d(gamma, .) is affine near y on every flat model
    return v;
  };

  if (m.is_periodic()) {
    const double L = m.circumference();
    if (is_cut_pair(m, x, y)) {
      if (m.has_drift()) {
        // Uniform weights are forced only when the reflection fixing x and y
        // also preserves the potential.
        const double scale = 1.0 + std::abs(m.potential_value(x));
        for (int i = 1; i <= 64; ++i) {
          const double s = L * i / 129.0;
          if (std::abs(m.potential_value(x + s) - m.potential_value(x - s)) > 1e-12 * scale) {
            throw UnsupportedConfiguration(
                "midpoint_measure: antipodal pair with a potential that breaks the "
                "reflection symmetry; weights are not determined");
          }
        }
      }
      out.atoms.push_back({m.normalize(x + L / 4.0), 0.5, variables(+1.0)});
      out.atoms.push_back({m.normalize(x - L / 4.0), 0.5, variables(-1.0)});
      return out;
    }
    const double delta = std::remainder(y - x, L);
    out.atoms.push_back({m.normalize(x + delta / 2.0), 1.0, variables(delta > 0 ? 1.0 : -1.0)});
    return out;
  }
  out.atoms.push_back({0.5 * (x + y), 1.0, variables(y > x ? 1.0 : -1.0)});
  return out;
}

Jet christoffel_jet(const Manifold1D& m, double u, int n) {
  if (n < 0) throw ArgumentError("christoffel_jet: order must be >= 0");
  m.require_contains(u, "u");
  if (m.metric().is_flat()) return Jet::constant(0.0, n);
  // Gamma = (log g)' / 2.
  const Jet log_g = log_jet(m.metric_jet(u, n + 1));
  Jet out = jet_scaled(jet_derivative(log_g), 0.5);
  out.center.x = u;
  out.measure = Measure::Custom;
  return out;
}

}  // namespace heatlab
