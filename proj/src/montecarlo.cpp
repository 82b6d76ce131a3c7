#include "heatlab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "heatlab/error.hpp"
#include "heatlab/parallel.hpp"

namespace heatlab {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

// Local drift evaluator avoiding per-step allocation.
class Drift {
 public:
  explicit Drift(const Manifold1D& m)
      : coeffs_(m.potential().coeffs), periodic_(m.is_periodic()),
        length_(m.is_periodic() ? m.circumference() : 1.0) {}

  double operator()(double u) const {
    if (coeffs_.size() < 2) return 0.0;
    double z = 0.0;
    if (periodic_) {
      for (std::size_t i = 1; i < coeffs_.size(); ++i) {
        const int k = static_cast<int>((i + 1) / 2);
        const double w = 2.0 * std::numbers::pi * k / length_;
        z += (i % 2 == 1) ? -coeffs_[i] * w * std::sin(w * u) : coeffs_[i] * w * std::cos(w * u);
      }
    } else {
      for (std::size_t i = coeffs_.size() - 1; i >= 1; --i) {
        z = z * u + static_cast<double>(i) * coeffs_[i];
      }
    }
    return z;
  }

 private:
  std::vector<double> coeffs_;
  bool periodic_;
  double length_;
};

Philox4x32::Key key_of(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// Per-path random stream. One Philox block yields the Box-Muller normals of
// two consecutive steps; word 3 of the counter selects the bridge uniforms.
class PathStream {
 public:
  PathStream(std::size_t path, const Philox4x32::Key& key)
      : lo_(static_cast<std::uint32_t>(static_cast<std::uint64_t>(path))),
        hi_(static_cast<std::uint32_t>(static_cast<std::uint64_t>(path) >> 32)),
        key_(key) {}

  double normal(int step) {
    load(step);
    return normal_[step & 1];
  }
  double uniform(int step) {
    load(step);
    if (!uniform_ready_) {
      const auto c = Philox4x32::block({lo_, hi_, pair_, 1u}, key_);
      uniform_[0] = uniform_open(c[0], c[1]);
      uniform_[1] = uniform_open(c[2], c[3]);
      uniform_ready_ = true;
    }
    return uniform_[step & 1];
  }

 private:
  void load(int step) {
    const auto pair = static_cast<std::uint32_t>(step >> 1);
    if (loaded_ && pair == pair_) return;
    pair_ = pair;
    loaded_ = true;
    const auto b = Philox4x32::block({lo_, hi_, pair, 0u}, key_);
    const double r = std::sqrt(-2.0 * std::log(uniform_open(b[0], b[1])));
    const double angle = 2.0 * std::numbers::pi * uniform_open(b[2], b[3]);
    normal_[0] = r * std::cos(angle);
    normal_[1] = r * std::sin(angle);
    uniform_ready_ = false;
  }

  std::uint32_t lo_;
  std::uint32_t hi_;
  Philox4x32::Key key_;
  bool loaded_ = false;
  bool uniform_ready_ = false;
  std::uint32_t pair_ = 0;
  double normal_[2] = {0.0, 0.0};
  double uniform_[2] = {0.0, 0.0};
};

int step_count(const SimulationConfig& cfg) {
  return static_cast<int>(std::ceil(cfg.t / cfg.dt - 1e-9));
}

void check_step(double drift, double dt) {
  if (std::abs(drift) * dt > 0.5 * std::sqrt(2.0 * dt)) {
    throw StepSizeError("simulation: |Z| dt = " + std::to_string(std::abs(drift) * dt) +
                        " exceeds half the diffusive displacement; reduce dt");
  }
}

void require_simulable(const Manifold1D& m) {
  if (m.kind() == ManifoldKind::HyperbolicRadial3) {
    throw UnsupportedConfiguration("simulation: the radial hyperbolic model is not simulated");
  }
  if (!m.metric().is_flat()) throw UnsupportedConfiguration("simulation: flat metric required");
}

double bridge_cross(double gap0, double gap1, double dt) {
  if (gap0 <= 0.0 || gap1 <= 0.0) return 1.0;
  const double e = gap0 * gap1 / dt;
  return e > 745.0 ? 0.0 : std::exp(-e);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  // 52 bits so that the largest value, 1 - 2^-53, is representable.
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

void validate(const SimulationConfig& cfg) {
  if (!(cfg.t > 0.0)) throw ArgumentError("simulation: horizon t must be > 0");
  if (!(cfg.dt > 0.0)) throw ArgumentError("simulation: dt must be > 0");
  if (cfg.dt > cfg.t / 100.0 * (1.0 + 1e-12)) {
    throw ArgumentError("simulation: dt must be at most t/100");
  }
  if (cfg.paths < 1000) throw ArgumentError("simulation: at least 1000 paths are required");
  if (!cfg.manifold.interior(cfg.x)) {
    throw DomainError("simulation: start point outside the open domain of " + cfg.manifold.id());
  }
  require_simulable(cfg.manifold);
}

EndpointSample simulate_endpoints(const SimulationConfig& cfg) {
  validate(cfg);
  const Manifold1D& m = cfg.manifold;
  const Drift drift(m);
  const int steps = step_count(cfg);
  const double dt = cfg.t / steps;
  const double sd = std::sqrt(2.0 * dt);
  const auto key = key_of(cfg.seed);
  const bool killing = m.kind() == ManifoldKind::DirichletInterval;
  const double a = m.lower();
  const double b = m.upper();

  EndpointSample out;
  out.endpoints.assign(cfg.paths, 0.0);
  out.absorbed.assign(cfg.paths, 0);
  parallel_for(
      cfg.paths,
      [&](std::size_t i) {
        PathStream rng(i, key);
        double x = cfg.x;
        for (int s = 0; s < steps; ++s) {
          const double z = drift(x);
          check_step(z, dt);
          const double next = x + z * dt + sd * rng.normal(s);
          if (killing) {
            bool dead = next <= a || next >= b;
            if (!dead && cfg.bridge_correction) {
              const double p = bridge_cross(x - a, next - a, dt) + bridge_cross(b - x, b - next, dt);
              dead = p > 0.0 && rng.uniform(s) < p;
            }
            if (dead) {
              out.absorbed[i] = 1;
              out.endpoints[i] = std::numeric_limits<double>::quiet_NaN();
              return;
            }
          }
          x = next;
        }
        out.endpoints[i] = m.normalize(x);
      },
      cfg.threads);
  out.absorbed_count = static_cast<std::size_t>(
      std::count(out.absorbed.begin(), out.absorbed.end(), std::uint8_t{1}));
  return out;
}

Estimate mc_exit_probability(const SimulationConfig& cfg, double radius) {
  validate(cfg);
  if (!(radius > 0.0)) throw ArgumentError("exit probability: radius must be > 0");
  const Manifold1D& m = cfg.manifold;
  if (m.is_periodic() && radius >= m.circumference() / 2.0) {
    throw ArgumentError("exit probability: ball must not cover the circle");
  }
  if (m.kind() == ManifoldKind::DirichletInterval &&
      (cfg.x - radius < m.lower() || cfg.x + radius > m.upper())) {
    throw DomainError("exit probability: ball leaves the interval");
  }
  const Drift drift(m);
  const int steps = step_count(cfg);
  const double dt = cfg.t / steps;
  const double sd = std::sqrt(2.0 * dt);
  const auto key = key_of(cfg.seed);

  std::vector<double> exited(cfg.paths, 0.0);
  parallel_for(
      cfg.paths,
      [&](std::size_t i) {
        PathStream rng(i, key);
        double disp = 0.0;
        for (int s = 0; s < steps; ++s) {
          const double z = drift(cfg.x + disp);
          check_step(z, dt);
          const double next = disp + z * dt + sd * rng.normal(s);
          bool out = std::abs(next) >= radius;
          if (!out && cfg.bridge_correction) {
            const double p = bridge_cross(radius - disp, radius - next, dt) +
                             bridge_cross(radius + disp, radius + next, dt);
            out = p > 0.0 && rng.uniform(s) < p;
          }
          if (out) {
            exited[i] = 1.0;
            return;
          }
          disp = next;
        }
      },
      cfg.threads);
  Estimate e;
  e.paths = cfg.paths;
  e.value = pairwise_sum(exited) / static_cast<double>(cfg.paths);
  e.standard_error =
      std::sqrt(std::max(e.value * (1.0 - e.value), 0.0) / static_cast<double>(cfg.paths - 1));
  return e;
}

DensityCheck mc_density_check(const SimulationConfig& cfg, const Kernel& kernel,
                              const BinSpec& spec) {
  validate(cfg);
  const Manifold1D& m = cfg.manifold;
  if (kernel.manifold().fingerprint() != m.fingerprint()) {
    throw ArgumentError("density check: kernel and simulation use different manifolds");
  }
  if (spec.bins < 1) throw ArgumentError("density check: need at least one bin");
  if (cfg.paths < static_cast<std::size_t>(spec.bins) * 50) {
    throw StatisticsError("density check: fewer than 50 paths per bin (" +
                          std::to_string(cfg.paths) + " paths, " + std::to_string(spec.bins) +
                          " bins)");
  }
  double lo = spec.lo;
  double hi = spec.hi;
  if (!(hi > lo)) {
    if (m.is_periodic()) {
      lo = 0.0;
      hi = m.circumference();
    } else if (m.kind() == ManifoldKind::DirichletInterval) {
      lo = m.lower();
      hi = m.upper();
    } else {
      double mean = cfg.x;
      double var = 2.0 * cfg.t;
      if (kernel.id() == KernelId::Mehler) {
        const auto law = weighted_line_law(m, cfg.t, cfg.x);
        mean = law.mean;
        var = law.variance;
      }
      lo = mean - 5.0 * std::sqrt(var);
      hi = mean + 5.0 * std::sqrt(var);
    }
  }

  const EndpointSample sample = simulate_endpoints(cfg);
  const double n = static_cast<double>(cfg.paths);
  const double width = (hi - lo) / spec.bins;
  std::vector<double> counts(static_cast<std::size_t>(spec.bins), 0.0);
  for (std::size_t i = 0; i < cfg.paths; ++i) {
    if (sample.absorbed[i]) continue;
    const double e = sample.endpoints[i];
    if (e < lo || e >= hi) continue;
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>((e - lo) / width),
                                           static_cast<std::size_t>(spec.bins - 1));
    counts[bin] += 1.0;
  }

  DensityCheck out;
  out.bins.resize(static_cast<std::size_t>(spec.bins));
  double peak = 0.0;
  for (int k = 0; k < spec.bins; ++k) {
    auto& bin = out.bins[static_cast<std::size_t>(k)];
    bin.lo = lo + k * width;
    bin.hi = bin.lo + width;
    bin.expected = boost::math::quadrature::gauss<double, 30>::integrate(
        [&](double y) { return kernel.value(cfg.t, cfg.x, y); }, bin.lo, bin.hi);
    bin.observed = counts[static_cast<std::size_t>(k)] / n;
    peak = std::max(peak, bin.expected / width);
  }
  for (auto& bin : out.bins) {
    const double p = std::clamp(bin.expected, 0.0, 1.0);
    bin.standard_error = std::sqrt(std::max(p * (1.0 - p), 1.0 / n) / n);
    bin.allowance = kDensityBiasAllowance * peak * width;
    const double gap = std::abs(bin.observed - bin.expected);
    bin.deviation = gap / bin.standard_error;
    bin.pass = gap <= kDensitySigma * bin.standard_error + bin.allowance;
    out.max_standardized_deviation = std::max(out.max_standardized_deviation, bin.deviation);
    out.pass = out.pass && bin.pass;
  }
  if (m.kind() == ManifoldKind::DirichletInterval) {
    out.surviving_fraction = 1.0 - static_cast<double>(sample.absorbed_count) / n;
    double mass = 0.0;
    const double piece = (m.upper() - m.lower()) / spec.bins;
    for (int k = 0; k < spec.bins; ++k) {
      mass += boost::math::quadrature::gauss<double, 30>::integrate(
          [&](double y) { return kernel.value(cfg.t, cfg.x, y); }, m.lower() + k * piece,
          m.lower() + (k + 1) * piece);
    }
    out.expected_survival = mass;
    const double s = std::clamp(mass, 0.0, 1.0);
    out.survival_standard_error = std::sqrt(std::max(s * (1.0 - s), 1.0 / n) / n);
    out.survival_pass = std::abs(out.surviving_fraction - out.expected_survival) <=
                        kSurvivalSigma * out.survival_standard_error;
    out.pass = out.pass && out.survival_pass;
  }
  return out;
}

}  // namespace heatlab
