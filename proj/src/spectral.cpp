#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"
#include "heatlab/kernels.hpp"

namespace heatlab {

namespace {

using cd = std::complex<double>;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Ground-state transform of d^2 + f' d: e^{f/2} (d^2 + f' d) e^{-f/2} = d^2 - V.
struct Basis {
  int n = 0;
  int modes = 0;
  double length = 1.0;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd vectors;  // row a <-> wavenumber a - modes
  double v_abs_max = 0.0;
};

// Symbol of the fourth-order stencil (-1/12, 4/3, -5/2, 4/3, -1/12) / h^2 for -d^2.
double stencil_symbol(int k, int n, double h) {
  const double theta = kTwoPi * k / n;
  return (2.5 - (8.0 / 3.0) * std::cos(theta) + (1.0 / 6.0) * std::cos(2.0 * theta)) / (h * h);
}

std::vector<double> ground_state_potential(const Manifold1D& m, int n) {
  const double h = m.circumference() / n;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Jet f = m.potential_jet(i * h, 2);
    v[i] = 0.5 * f[2] + 0.25 * f[1] * f[1];
  }
  return v;
}

std::shared_ptr<const Basis> build_basis(const Manifold1D& m, int n, int modes) {
  const double L = m.circumference();
  const double h = L / n;
  const auto v = ground_state_potential(m, n);
  auto basis = std::make_shared<Basis>();
  basis->n = n;
  basis->modes = modes;
  basis->length = L;
  for (double x : v) basis->v_abs_max = std::max(basis->v_abs_max, std::abs(x));

  const int size = 2 * modes + 1;
  // Fourier coefficients of the grid samples for |shift| <= 2 * modes.
  std::vector<cd> vhat(static_cast<std::size_t>(4 * modes + 1), cd(0.0, 0.0));
  bool flat = true;
  for (double x : v) flat = flat && x == 0.0;
  if (!flat) {
    for (int s = -2 * modes; s <= 2 * modes; ++s) {
      cd acc(0.0, 0.0);
      for (int i = 0; i < n; ++i) {
        const double phase = -kTwoPi * static_cast<double>(s) * i / n;
        acc += v[i] * cd(std::cos(phase), std::sin(phase));
      }
      vhat[static_cast<std::size_t>(s + 2 * modes)] = acc / static_cast<double>(n);
    }
  }
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(size, size);
  for (int p = 0; p < size; ++p) {
    for (int q = 0; q < size; ++q) {
      a(p, q) = vhat[static_cast<std::size_t>(p - q + 2 * modes)];
    }
    a(p, p) += stencil_symbol(p - modes, n, h);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("spectral: eigensolver did not converge (n=" + std::to_string(n) +
                           ", modes=" + std::to_string(modes) + ", |V|max=" +
                           std::to_string(basis->v_abs_max) + ")");
  }
  basis->eigenvalues = solver.eigenvalues();
  basis->vectors = solver.eigenvectors();
  return basis;
}

struct Cache {
  std::shared_mutex mutex;
  std::map<std::string, std::shared_ptr<const Basis>> entries;
};

Cache& cache() {
  static Cache c;
  return c;
}

std::shared_ptr<const Basis> basis_for(const Manifold1D& m, int n, int modes) {
  const std::string key = m.fingerprint() + "#" + std::to_string(n) + "#" + std::to_string(modes);
  auto& c = cache();
  {
    std::shared_lock lock(c.mutex);
    auto it = c.entries.find(key);
    if (it != c.entries.end()) return it->second;
  }
  std::unique_lock lock(c.mutex);
  auto it = c.entries.find(key);
  if (it != c.entries.end()) return it->second;
  auto basis = build_basis(m, n, modes);
  c.entries.emplace(key, basis);
  return basis;
}

int choose_modes(const Manifold1D& m, int n, double t, int order) {
  const double L = m.circumference();
  double v_abs_max = 0.0;
  for (double v : ground_state_potential(m, std::min(n, 256))) {
    v_abs_max = std::max(v_abs_max, std::abs(v));
  }
  const int deg = m.potential().degree(true);
  const double needed = (60.0 + 4.0 * order) / t + 2.0 * v_abs_max;
  int k = static_cast<int>(std::ceil(L / kTwoPi * std::sqrt(needed))) + 4 * deg + 16;
  int modes = 32;
  while (modes < k) modes *= 2;
  return std::min(modes, n / 2 - 1);
}

struct RawJet {
  std::vector<double> values;
  std::vector<double> magnitude;
  double tail_scale = 0.0;
};

// y-jet of the transformed kernel K_H(x, .) on one basis.
RawJet evaluate(const Basis& b, double t, double x, double y, int order) {
  const int size = 2 * b.modes + 1;
  const double inv_sqrt_l = 1.0 / std::sqrt(b.length);
  const double w0 = kTwoPi / b.length;
  Eigen::VectorXcd ex(size);
  Eigen::VectorXcd ey(size);
  for (int p = 0; p < size; ++p) {
    const double w = w0 * (p - b.modes);
    ex(p) = cd(std::cos(w * x), std::sin(w * x)) * inv_sqrt_l;
    ey(p) = cd(std::cos(w * y), -std::sin(w * y)) * inv_sqrt_l;
  }
  // psi_j(x) = sum_k C(k, j) e^{i w_k x}
  Eigen::VectorXcd psi_x = b.vectors.transpose() * ex;
  Eigen::VectorXcd weights(size);
  for (int j = 0; j < size; ++j) weights(j) = std::exp(-t * b.eigenvalues(j)) * psi_x(j);
  // coefficient of conj(e_k(y)) after summing over modes
  Eigen::VectorXcd coeff = b.vectors.conjugate() * weights;

  RawJet out;
  out.values.assign(static_cast<std::size_t>(order) + 1, 0.0);
  out.magnitude.assign(static_cast<std::size_t>(order) + 1, 0.0);
  for (int p = 0; p < size; ++p) {
    const double w = w0 * (p - b.modes);
    cd factor = coeff(p) * ey(p);
    const cd step(0.0, -w);
    for (int d = 0; d <= order; ++d) {
      out.values[d] += factor.real();
      out.magnitude[d] += std::abs(factor);
      factor *= step;
    }
  }
  return out;
}

// Bound on the modes |k| > modes dropped from the Galerkin basis.
std::vector<double> truncation_tail(const Basis& b, double t, int order) {
  std::vector<double> tail(static_cast<std::size_t>(order) + 1, 0.0);
  const double h = b.length / b.n;
  const double w0 = kTwoPi / b.length;
  for (int k = b.modes + 1; k <= b.n / 2; ++k) {
    const double decay = std::exp(-t * (stencil_symbol(k, b.n, h) - b.v_abs_max));
    if (decay == 0.0) break;
    double w = 1.0;
    for (int d = 0; d <= order; ++d) {
      tail[d] += 2.0 * decay * w / b.length;
      w *= w0 * k;
    }
  }
  return tail;
}

}  // namespace

void clear_spectral_cache() {
  auto& c = cache();
  std::unique_lock lock(c.mutex);
  c.entries.clear();
}

std::size_t spectral_cache_size() {
  auto& c = cache();
  std::shared_lock lock(c.mutex);
  return c.entries.size();
}

Jet spectral_kernel_jet(const Manifold1D& m, int grid_size, double t, double x, double y, int n,
                        Measure measure) {
  SpectralOptions options;
  options.grid_size = grid_size;
  options.measure = measure;
  return spectral_kernel_jet(m, t, x, y, n, options);
}

Jet spectral_kernel_jet(const Manifold1D& m, double t, double x, double y, int n,
                        const SpectralOptions& options) {
  if (!m.is_periodic()) {
    throw UnsupportedConfiguration("spectral backend needs a circle variant, got " + m.id());
  }
  if (!m.metric().is_flat()) {
    throw UnsupportedConfiguration("spectral backend needs a flat metric");
  }
  if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("spectral: t must be > 0");
  if (n < 0) throw ArgumentError("spectral: order must be >= 0");
  const int grid = options.grid_size;
  if (grid < 64 || (grid & (grid - 1)) != 0) {
    throw ArgumentError("spectral: grid size must be a power of two >= 64, got " +
                        std::to_string(grid));
  }
  if (options.measure == Measure::Custom) {
    throw ArgumentError("spectral: measure must be Riemannian or symmetrizing");
  }
  const int modes = options.modes > 0 ? std::min(options.modes, grid / 2 - 1)
                                      : choose_modes(m, grid, t, n);
  const auto basis = basis_for(m, grid, modes);
  const RawJet raw = evaluate(*basis, t, x, y, n);
  const auto tail = truncation_tail(*basis, t, n);

  std::vector<double> refine_gap(static_cast<std::size_t>(n) + 1, 0.0);
  if (options.refine) {
    const auto fine = basis_for(m, 2 * grid, modes);
    const RawJet raw_fine = evaluate(*fine, t, x, y, n);
    for (int d = 0; d <= n; ++d) refine_gap[d] = std::abs(raw_fine.values[d] - raw.values[d]);
  }

  Jet kh;
  kh.values = raw.values;
  kh.error_bounds.resize(raw.values.size());
  for (int d = 0; d <= n; ++d) {
    kh.error_bounds[d] = 2.0 * refine_gap[d] + tail[d] +
                         64.0 * (2 * modes + 1) * kEps * raw.magnitude[d];
  }

  Jet out = kh;
  if (m.has_drift()) {
    // p_mu = e^{(f(y) - f(x))/2} K_H, p_nu = e^{-(f(x) + f(y))/2} K_H
    const double sign = options.measure == Measure::Riemannian ? 0.5 : -0.5;
    Jet half = jet_scaled(m.potential_jet(y, n), sign);
    Jet density = exp_jet(half);
    out = jet_scaled(jet_product(kh, density), std::exp(-0.5 * m.potential_value(x)));
  }
  out.center = {t, x, y};
  out.measure = options.measure;
  return out;
}

}  // namespace heatlab
