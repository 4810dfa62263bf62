#pragma once

// Spectral calculus on flat tori (R / 2 pi Z)^n sampled on uniform grids.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "resolab/common.hpp"

namespace resolab {

using Index = Eigen::Index;

class TorusGrid {
 public:
  TorusGrid() = default;
  /// Per-axis sample counts; each must be even and >= 8.
  explicit TorusGrid(std::vector<int> sizes);
  static TorusGrid cube(int n, int samples);

  int dim() const { return static_cast<int>(sizes_.size()); }
  int size(int axis) const { return sizes_[axis]; }
  const std::vector<int>& sizes() const { return sizes_; }
  Index points() const { return points_; }
  double spacing(int axis) const { return 2.0 * kPi / sizes_[axis]; }
  /// h_1 ... h_n
  double cell_volume() const;
  Index stride(int axis) const { return strides_[axis]; }

  /// Signed frequency in [-N/2, N/2) of a storage index along one axis.
  int frequency(int axis, int i) const { return i < sizes_[axis] / 2 ? i : i - sizes_[axis]; }
  /// Storage index along an axis of a signed frequency (must be representable).
  int slot(int axis, int k) const { return k >= 0 ? k : k + sizes_[axis]; }
  bool representable(int axis, int k) const { return k >= -sizes_[axis] / 2 && k < sizes_[axis] / 2; }
  bool is_nyquist(int axis, int k) const { return k == -sizes_[axis] / 2; }

  void unravel(Index flat, std::span<int> out) const;
  Index ravel(std::span<const int> idx) const;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) { return a.sizes_ == b.sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<Index> strides_;
  Index points_ = 0;
};

/// Complex samples in physical space, row-major over axes (last axis fastest).
struct GridField {
  TorusGrid grid;
  Eigen::VectorXcd values;

  GridField() = default;
  explicit GridField(TorusGrid g) : grid(std::move(g)), values(Eigen::VectorXcd::Zero(grid.points())) {}
  GridField(TorusGrid g, Eigen::VectorXcd v);
};

/// Unitary Fourier coefficients, same storage order as GridField.
struct Spectrum {
  TorusGrid grid;
  Eigen::VectorXcd coeffs;
};

Spectrum fourier_forward(const GridField& u);
GridField fourier_inverse(const Spectrum& s);

/// Grid sample of f(x) at x_a = i_a h_a.
GridField sample(const TorusGrid& grid, const std::function<Complex(std::span<const double>)>& f);

/// Band-limited random field with Gaussian coefficients on |k_a| < band.
GridField random_field(const TorusGrid& grid, std::uint64_t seed, int band);

struct LatticeMultiplier {
  TorusGrid grid;
  Eigen::VectorXcd symbol;  // indexed like Spectrum::coeffs
};

/// Tabulate a symbol over the representable lattice; Nyquist frequencies get 0.
LatticeMultiplier make_multiplier(const TorusGrid& grid, const std::function<Complex(std::span<const int>)>& symbol);

Spectrum apply_multiplier(const LatticeMultiplier& m, const Spectrum& s);
GridField apply_multiplier(const LatticeMultiplier& m, const GridField& u);

/// |k|^2 for every storage index.
Eigen::VectorXd squared_frequency(const TorusGrid& grid);
/// Mask of storage indices carrying a Nyquist frequency on some axis.
Eigen::Array<bool, Eigen::Dynamic, 1> nyquist_mask(const TorusGrid& grid);

LatticeMultiplier helmholtz_multiplier(const TorusGrid& grid, Complex z);
/// Throws SingularError when min |k|^2 + z is below 1e-12 in modulus.
LatticeMultiplier resolvent_multiplier(const TorusGrid& grid, Complex z);
LatticeMultiplier cluster_multiplier(const TorusGrid& grid, int m);

GridField helmholtz_apply(const GridField& u, Complex z);
GridField resolvent_apply(const GridField& f, Complex z);
GridField cluster_project(const GridField& u, int m);

/// Projection onto e^{i j x_1} e^{i k'.x'}; axis 0 is the distinguished factor.
GridField pi_jk_project(const GridField& u, int j, std::span<const int> k_rest);

struct LatticeMin {
  double value;        // min_k |k|^2 + z| over the represented, non-Nyquist lattice
  std::vector<int> k;  // a minimizing frequency
};
LatticeMin resolvent_lattice_min(const TorusGrid& grid, Complex z);
/// Exact L^2 -> L^2 norm of R(z) on the represented lattice: 1 / min_k |k|^2 + z|.
double resolvent_l2_norm(const TorusGrid& grid, Complex z);


/// (h^n sum |u_i|^p)^{1/p}; p = kInfinity gives max |u_i|.
double lp_norm(const GridField& u, double p);
/// Spectral zero-padding to factor * N per axis; Nyquist content is split evenly.
GridField zero_pad(const GridField& u, int factor);
double lp_norm_oversampled(const GridField& u, double p, int factor = 2);

/// h^n-weighted inner product sum conj(a_i) b_i h^n.
Complex inner(const GridField& a, const GridField& b);

}  // namespace resolab
