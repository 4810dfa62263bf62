#include "resolab/torus.hpp"

#include <cmath>
#include <random>

#include <unsupported/Eigen/FFT>

namespace resolab {

TorusGrid::TorusGrid(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw DomainError("TorusGrid: dimension must be positive");
  for (int s : sizes_)
    if (s < 8 || s % 2) throw DomainError("TorusGrid: samples per axis must be even and >= 8");
  strides_.assign(sizes_.size(), 1);
  for (int a = dim() - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * sizes_[a + 1];
  points_ = strides_[0] * sizes_[0];
}

TorusGrid TorusGrid::cube(int n, int samples) { return TorusGrid(std::vector<int>(n, samples)); }

double TorusGrid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= spacing(a);
  return v;
}

void TorusGrid::unravel(Index flat, std::span<int> out) const {
  for (int a = 0; a < dim(); ++a) {
    out[a] = static_cast<int>(flat / strides_[a]);
    flat %= strides_[a];
  }
}

Index TorusGrid::ravel(std::span<const int> idx) const {
  Index flat = 0;
  for (int a = 0; a < dim(); ++a) flat += idx[a] * strides_[a];
  return flat;
}

GridField::GridField(TorusGrid g, Eigen::VectorXcd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.points()) throw DomainError("GridField: value count does not match grid");
}

namespace {

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

void transform_axes(const TorusGrid& grid, Eigen::VectorXcd& data, bool forward) {
  auto& fft = fft_engine();
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const int len = grid.size(axis);
    const Index stride = grid.stride(axis);
    const Index lines = grid.points() / len;
    const double scale = 1.0 / std::sqrt(static_cast<double>(len));
    std::vector<Complex> in(len), out(len);
    for (Index line = 0; line < lines; ++line) {
      // Line base: split the line counter around the transformed axis.
      const Index outer = line / stride;
      const Index inner = line % stride;
      const Index base = outer * stride * len + inner;
      for (int i = 0; i < len; ++i) in[i] = data[base + i * stride];
      if (forward)
        fft.fwd(out, in);
      else
        fft.inv(out, in);
      for (int i = 0; i < len; ++i) data[base + i * stride] = out[i] * scale;
    }
  }
}

}  // namespace

Spectrum fourier_forward(const GridField& u) {
  Spectrum s{u.grid, u.values};
  transform_axes(s.grid, s.coeffs, true);
  return s;
}

GridField fourier_inverse(const Spectrum& s) {
  GridField u(s.grid, s.coeffs);
  transform_axes(u.grid, u.values, false);
  return u;
}

GridField sample(const TorusGrid& grid, const std::function<Complex(std::span<const double>)>& f) {
  GridField u(grid);
  std::vector<int> idx(grid.dim());
  std::vector<double> x(grid.dim());
  for (Index i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    for (int a = 0; a < grid.dim(); ++a) x[a] = idx[a] * grid.spacing(a);
    u.values[i] = f(x);
  }
  return u;
}

GridField random_field(const TorusGrid& grid, std::uint64_t seed, int band) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Spectrum s{grid, Eigen::VectorXcd::Zero(grid.points())};
  std::vector<int> idx(grid.dim());
  for (Index i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    bool inside = true;
    for (int a = 0; a < grid.dim(); ++a) {
      const int k = grid.frequency(a, idx[a]);
      if (std::abs(k) >= band || grid.is_nyquist(a, k)) inside = false;
    }
    // Draw for every index so the sequence does not depend on the band.
    const Complex c(normal(rng), normal(rng));
    if (inside) s.coeffs[i] = c;
  }
  return fourier_inverse(s);
}

LatticeMultiplier make_multiplier(const TorusGrid& grid, const std::function<Complex(std::span<const int>)>& symbol) {
  LatticeMultiplier m{grid, Eigen::VectorXcd::Zero(grid.points())};
  std::vector<int> idx(grid.dim()), k(grid.dim());
  for (Index i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    bool nyquist = false;
    for (int a = 0; a < grid.dim(); ++a) {
      k[a] = grid.frequency(a, idx[a]);
      nyquist = nyquist || grid.is_nyquist(a, k[a]);
    }
    if (!nyquist) m.symbol[i] = symbol(k);
  }
  return m;
}

Spectrum apply_multiplier(const LatticeMultiplier& m, const Spectrum& s) {
  if (!(m.grid == s.grid)) throw DomainError("apply_multiplier: grid mismatch");
  return {s.grid, m.symbol.cwiseProduct(s.coeffs)};
}

GridField apply_multiplier(const LatticeMultiplier& m, const GridField& u) {
  return fourier_inverse(apply_multiplier(m, fourier_forward(u)));
}

Eigen::VectorXd squared_frequency(const TorusGrid& grid) {
  Eigen::VectorXd out(grid.points());
  std::vector<int> idx(grid.dim());
  for (Index i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    double s = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double k = grid.frequency(a, idx[a]);
      s += k * k;
    }
    out[i] = s;
  }
  return out;
}

Eigen::Array<bool, Eigen::Dynamic, 1> nyquist_mask(const TorusGrid& grid) {
  Eigen::Array<bool, Eigen::Dynamic, 1> mask(grid.points());
  std::vector<int> idx(grid.dim());
  for (Index i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    bool ny = false;
    for (int a = 0; a < grid.dim(); ++a) ny = ny || grid.is_nyquist(a, grid.frequency(a, idx[a]));
    mask[i] = ny;
  }
  return mask;
}

namespace {

double squared(std::span<const int> k) {
  double s = 0.0;
  for (int v : k) s += double(v) * v;
  return s;
}

}  // namespace

LatticeMultiplier helmholtz_multiplier(const TorusGrid& grid, Complex z) {
  return make_multiplier(grid, [z](std::span<const int> k) { return squared(k) + z; });
}

LatticeMin resolvent_lattice_min(const TorusGrid& grid, Complex z) {
  LatticeMin best{std::numeric_limits<double>::infinity(), {}};
  std::vector<int> idx(grid.dim()), k(grid.dim());
  for (Index i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    bool nyquist = false;
    for (int a = 0; a < grid.dim(); ++a) {
      k[a] = grid.frequency(a, idx[a]);
      nyquist = nyquist || grid.is_nyquist(a, k[a]);
    }
    if (nyquist) continue;
    const double v = std::abs(squared(k) + z);
    if (v < best.value) best = {v, k};
  }
  return best;
}

double resolvent_l2_norm(const TorusGrid& grid, Complex z) {
  const LatticeMin m = resolvent_lattice_min(grid, z);
  if (m.value < 1e-12) throw SingularError("resolvent: z is on the negated spectrum");
  return 1.0 / m.value;
}

LatticeMultiplier resolvent_multiplier(const TorusGrid& grid, Complex z) {
  if (resolvent_lattice_min(grid, z).value < 1e-12) throw SingularError("resolvent: z is on the negated spectrum");
  return make_multiplier(grid, [z](std::span<const int> k) { return 1.0 / (squared(k) + z); });
}

LatticeMultiplier cluster_multiplier(const TorusGrid& grid, int m) {
  if (m < 0) throw DomainError("cluster_multiplier: m must be >= 0");
  const double lo = double(m) * m, hi = double(m + 1) * (m + 1);
  return make_multiplier(grid, [lo, hi](std::span<const int> k) {
    const double s = squared(k);
    return Complex(s >= lo && s < hi ? 1.0 : 0.0);
  });
}

GridField helmholtz_apply(const GridField& u, Complex z) { return apply_multiplier(helmholtz_multiplier(u.grid, z), u); }

GridField resolvent_apply(const GridField& f, Complex z) { return apply_multiplier(resolvent_multiplier(f.grid, z), f); }

GridField cluster_project(const GridField& u, int m) { return apply_multiplier(cluster_multiplier(u.grid, m), u); }

GridField pi_jk_project(const GridField& u, int j, std::span<const int> k_rest) {
  const TorusGrid& g = u.grid;
  if (static_cast<int>(k_rest.size()) != g.dim() - 1) throw DomainError("pi_jk_project: k has wrong length");
  Spectrum s = fourier_forward(u);
  std::vector<int> k(g.dim());
  k[0] = j;
  for (int a = 1; a < g.dim(); ++a) k[a] = k_rest[a - 1];
  Spectrum out{g, Eigen::VectorXcd::Zero(g.points())};
  bool ok = true;
  for (int a = 0; a < g.dim(); ++a) ok = ok && g.representable(a, k[a]) && !g.is_nyquist(a, k[a]);
  if (ok) {
    std::vector<int> idx(g.dim());
    for (int a = 0; a < g.dim(); ++a) idx[a] = g.slot(a, k[a]);
    const Index flat = g.ravel(idx);
    out.coeffs[flat] = s.coeffs[flat];
  }
  return fourier_inverse(out);
}

double lp_norm(const GridField& u, double p) {
  if (std::isinf(p)) return u.values.cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw DomainError("lp_norm: p must be >= 1");
  const double w = u.grid.cell_volume();
  if (p == 2.0) return std::sqrt(w * u.values.squaredNorm());
  // Scale by the max to keep large p finite.
  const double peak = u.values.cwiseAbs().maxCoeff();
  if (peak == 0.0) return 0.0;
  const double s = (u.values.cwiseAbs() / peak).array().pow(p).sum();
  return peak * std::pow(w * s, 1.0 / p);
}

GridField zero_pad(const GridField& u, int factor) {
  if (factor < 1) throw DomainError("zero_pad: factor must be >= 1");
  if (factor == 1) return u;
  const TorusGrid& g = u.grid;
  std::vector<int> big_sizes(g.dim());
  for (int a = 0; a < g.dim(); ++a) big_sizes[a] = g.size(a) * factor;
  TorusGrid big(big_sizes);
  const Spectrum s = fourier_forward(u);
  Spectrum out{big, Eigen::VectorXcd::Zero(big.points())};
  const double gain = std::sqrt(static_cast<double>(big.points()) / g.points());
  std::vector<int> idx(g.dim()), k(g.dim()), target(g.dim());
  for (Index i = 0; i < g.points(); ++i) {
    if (s.coeffs[i] == Complex(0.0)) continue;
    g.unravel(i, idx);
    std::vector<int> nyq_axes;
    for (int a = 0; a < g.dim(); ++a) {
      k[a] = g.frequency(a, idx[a]);
      if (g.is_nyquist(a, k[a])) nyq_axes.push_back(a);
    }
    const int copies = 1 << nyq_axes.size();
    const Complex c = s.coeffs[i] * gain / double(copies);
    for (int mask = 0; mask < copies; ++mask) {
      for (int a = 0; a < g.dim(); ++a) target[a] = k[a];
      for (size_t b = 0; b < nyq_axes.size(); ++b)
        if (mask & (1 << b)) target[nyq_axes[b]] = -k[nyq_axes[b]];
      for (int a = 0; a < g.dim(); ++a) target[a] = big.slot(a, target[a]);
      out.coeffs[big.ravel(target)] += c;
    }
  }
  return fourier_inverse(out);
}

double lp_norm_oversampled(const GridField& u, double p, int factor) { return lp_norm(zero_pad(u, factor), p); }

Complex inner(const GridField& a, const GridField& b) {
  if (!(a.grid == b.grid)) throw DomainError("inner: grid mismatch");
  return a.values.dot(b.values) * a.grid.cell_volume();
}

}  // namespace resolab
