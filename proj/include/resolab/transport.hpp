#pragma once

// Transport coefficients alpha_nu(x, y) of the Hadamard parametrix, sampled
// on a uniform grid of a metric chart for a list of centres y.

#include <vector>

#include "resolab/metric.hpp"

namespace resolab {

using Index = Eigen::Index;
using Mask = std::vector<unsigned char>;

/// Uniform grid lo + i h (i = 0 .. counts - 1 per axis), last axis fastest.
struct ChartGrid {
  int n = 0;
  ChartVector lo;
  double h = 0.0;
  std::vector<int> counts;

  /// per_axis points spanning the (cubical) chart box, boundary included.
  static ChartGrid covering(const MetricChart& chart, int per_axis);

  Index points() const;
  double cell_volume() const;
  ChartVector point(Index i) const;
  void unravel(Index i, int* idx) const;
  Index ravel(const int* idx) const;
  /// Index of the point step cells away along axis, or -1 outside the grid.
  Index shifted(Index i, int axis, int step) const;
  Index nearest(const ChartVector& x) const;
};

/// Pointwise inverse metric, contracted Christoffel symbols b^l = g^{jk} Gamma^l_jk and sqrt(det g).
struct GridGeometry {
  std::vector<ChartMatrix> ginv;
  std::vector<ChartVector> b;
  Eigen::VectorXd sqrt_det;
};
GridGeometry grid_geometry(const MetricChart& chart, const ChartGrid& grid);

/// Delta_g f = g^{jk} d_jk f - b^l d_l f by second-order central differences,
/// defined where the whole 3^n stencil lies in `valid`; NaN elsewhere.
Eigen::VectorXd grid_laplacian(const ChartGrid& grid, const GridGeometry& geo, const Eigen::VectorXd& f,
                               const Mask& valid, Mask* out_valid = nullptr);
Eigen::VectorXcd grid_laplacian(const ChartGrid& grid, const GridGeometry& geo, const Eigen::VectorXcd& f,
                                const Mask& valid, Mask* out_valid = nullptr);

/// Cubic Lagrange interpolation of grid samples; false if the stencil leaves `valid`.
bool grid_interpolate(const ChartGrid& grid, const Eigen::VectorXd& f, const Mask& valid, const ChartVector& x,
                      double& out);

/// ceil((n - 1) / 2) + 1
int default_transport_order(int n);

struct TransportOptions {
  int order = -1;  // default_transport_order(n) when negative
  /// Only x with |x - y|_inf <= reach are shot.
  double reach = kInfinity;
  int simpson_nodes = 33;
  double position_tol = 1e-9;  // shooting endpoint error
  GeodesicOptions geodesic;
};

struct CenterTransport {
  Index center = 0;
  ChartVector y;
  int order = 0;
  Mask geodesic_valid;
  Eigen::VectorXd distance;
  Eigen::VectorXd jacobian;
  std::vector<ChartVector> radial;          // unit radial vector (coordinates) at x, zero at y
  std::vector<Eigen::VectorXd> alpha;       // alpha_0 .. alpha_order
  std::vector<Mask> alpha_valid;
  std::vector<Eigen::VectorXd> laplacian;   // Delta_g alpha_nu in x
  std::vector<Mask> laplacian_valid;
  std::vector<Eigen::VectorXd> alpha_dr;    // radial derivative of alpha_nu
  std::vector<Mask> alpha_dr_valid;
};

/// Geodesics from y to every grid point within reach (Newton shooting warm
/// started from a neighbour), J and alpha_0 = J^{-1/2}, then
/// alpha_nu = alpha_0 int_0^1 t^{nu-1} (alpha_0^{-1} Delta_g alpha_{nu-1})(gamma(t)) dt by Simpson.
CenterTransport center_transport(const MetricChart& chart, const ChartGrid& grid, const GridGeometry& geo,
                                 Index center, const TransportOptions& options = {});

struct TransportCoefficients {
  ChartGrid grid;
  GridGeometry geometry;
  int order = 0;
  std::vector<CenterTransport> centers;
};

TransportCoefficients transport_coefficients(const MetricChart& chart, const ChartGrid& grid,
                                             const std::vector<Index>& centers, const TransportOptions& options = {},
                                             int workers = 1);

}  // namespace resolab
