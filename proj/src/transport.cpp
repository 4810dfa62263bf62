#include "resolab/transport.hpp"

#include <cmath>
#include <deque>

#include "resolab/parallel.hpp"
#include "resolab/quadrature.hpp"

namespace resolab {

ChartGrid ChartGrid::covering(const MetricChart& chart, int per_axis) {
  if (per_axis < 4) throw DomainError("ChartGrid: need at least 4 points per axis");
  const double width = chart.hi[0] - chart.lo[0];
  for (int a = 1; a < chart.n; ++a)
    if (std::abs(chart.hi[a] - chart.lo[a] - width) > 1e-12 * width)
      throw DomainError("ChartGrid: chart box must be a cube");
  ChartGrid g;
  g.n = chart.n;
  g.lo = chart.lo;
  g.h = width / (per_axis - 1);
  g.counts.assign(chart.n, per_axis);
  return g;
}

Index ChartGrid::points() const {
  Index p = 1;
  for (int c : counts) p *= c;
  return p;
}

double ChartGrid::cell_volume() const { return std::pow(h, n); }

void ChartGrid::unravel(Index i, int* idx) const {
  for (int a = n - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(i % counts[a]);
    i /= counts[a];
  }
}

Index ChartGrid::ravel(const int* idx) const {
  Index i = 0;
  for (int a = 0; a < n; ++a) i = i * counts[a] + idx[a];
  return i;
}

ChartVector ChartGrid::point(Index i) const {
  int idx[kMaxChartDim];
  unravel(i, idx);
  ChartVector x(n);
  for (int a = 0; a < n; ++a) x[a] = lo[a] + idx[a] * h;
  return x;
}

Index ChartGrid::shifted(Index i, int axis, int step) const {
  int idx[kMaxChartDim];
  unravel(i, idx);
  idx[axis] += step;
  if (idx[axis] < 0 || idx[axis] >= counts[axis]) return -1;
  return ravel(idx);
}

Index ChartGrid::nearest(const ChartVector& x) const {
  int idx[kMaxChartDim];
  for (int a = 0; a < n; ++a)
    idx[a] = std::clamp(static_cast<int>(std::lround((x[a] - lo[a]) / h)), 0, counts[a] - 1);
  return ravel(idx);
}

GridGeometry grid_geometry(const MetricChart& chart, const ChartGrid& grid) {
  GridGeometry geo;
  const Index p = grid.points();
  geo.ginv.resize(p);
  geo.b.resize(p);
  geo.sqrt_det.resize(p);
  for (Index i = 0; i < p; ++i) {
    const ChartVector x = grid.point(i);
    const ChartMatrix g = chart.g(x);
    geo.ginv[i] = g.inverse();
    geo.sqrt_det[i] = std::sqrt(g.determinant());
    const Christoffel gamma = chart.christoffel(x);
    ChartVector b(grid.n);
    for (int l = 0; l < grid.n; ++l) b[l] = (geo.ginv[i].cwiseProduct(gamma[l])).sum();
    geo.b[i] = b;
  }
  return geo;
}

namespace {

template <class Vec>
Vec laplacian_impl(const ChartGrid& grid, const GridGeometry& geo, const Vec& f, const Mask& valid, Mask* out_valid) {
  using Scalar = typename Vec::Scalar;
  const Index p = grid.points();
  const int n = grid.n;
  const double h = grid.h;
  Vec out = Vec::Constant(p, Scalar(std::nan("")));
  if (out_valid) out_valid->assign(p, 0);
  int idx[kMaxChartDim];
  for (Index i = 0; i < p; ++i) {
    if (!valid[i]) continue;
    grid.unravel(i, idx);
    bool ok = true;
    for (int a = 0; a < n && ok; ++a) ok = idx[a] > 0 && idx[a] < grid.counts[a] - 1;
    if (!ok) continue;
    // All 3^n neighbours must be valid.
    int off[kMaxChartDim];
    for (int a = 0; a < n; ++a) off[a] = -1;
    for (;;) {
      int probe[kMaxChartDim];
      for (int a = 0; a < n; ++a) probe[a] = idx[a] + off[a];
      if (!valid[grid.ravel(probe)]) {
        ok = false;
        break;
      }
      int a = 0;
      while (a < n && ++off[a] == 2) off[a++] = -1;
      if (a == n) break;
    }
    if (!ok) continue;
    auto at = [&](int a, int da, int b, int db) {
      int probe[kMaxChartDim];
      for (int c = 0; c < n; ++c) probe[c] = idx[c];
      probe[a] += da;
      probe[b] += db;
      return f[grid.ravel(probe)];
    };
    const ChartMatrix& gi = geo.ginv[i];
    Scalar acc(0.0);
    for (int j = 0; j < n; ++j) {
      const Scalar dj = (at(j, 1, j, 0) - at(j, -1, j, 0)) / (2.0 * h);
      acc -= geo.b[i][j] * dj;
      acc += gi(j, j) * (at(j, 1, j, 0) - 2.0 * f[i] + at(j, -1, j, 0)) / (h * h);
      for (int k = j + 1; k < n; ++k) {
        const Scalar djk = (at(j, 1, k, 1) - at(j, 1, k, -1) - at(j, -1, k, 1) + at(j, -1, k, -1)) / (4.0 * h * h);
        acc += 2.0 * gi(j, k) * djk;
      }
    }
    out[i] = acc;
    if (out_valid) (*out_valid)[i] = 1;
  }
  return out;
}

// Cubic Lagrange weights on nodes -1, 0, 1, 2 at offset s in [0, 1].
void cubic_weights(double s, double* w) {
  w[0] = -s * (s - 1.0) * (s - 2.0) / 6.0;
  w[1] = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
  w[2] = -(s + 1.0) * s * (s - 2.0) / 2.0;
  w[3] = (s + 1.0) * s * (s - 1.0) / 6.0;
}

}  // namespace

Eigen::VectorXd grid_laplacian(const ChartGrid& grid, const GridGeometry& geo, const Eigen::VectorXd& f,
                               const Mask& valid, Mask* out_valid) {
  return laplacian_impl(grid, geo, f, valid, out_valid);
}

Eigen::VectorXcd grid_laplacian(const ChartGrid& grid, const GridGeometry& geo, const Eigen::VectorXcd& f,
                                const Mask& valid, Mask* out_valid) {
  return laplacian_impl(grid, geo, f, valid, out_valid);
}

bool grid_interpolate(const ChartGrid& grid, const Eigen::VectorXd& f, const Mask& valid, const ChartVector& x,
                      double& out) {
  const int n = grid.n;
  int base[kMaxChartDim];
  double w[kMaxChartDim][4];
  for (int a = 0; a < n; ++a) {
    const double s = (x[a] - grid.lo[a]) / grid.h;
    int b = static_cast<int>(std::floor(s)) - 1;
    b = std::clamp(b, 0, grid.counts[a] - 4);
    base[a] = b;
    cubic_weights(s - (b + 1), w[a]);
  }
  int off[kMaxChartDim] = {0, 0, 0, 0};
  double acc = 0.0;
  for (;;) {
    int probe[kMaxChartDim];
    double weight = 1.0;
    for (int a = 0; a < n; ++a) {
      probe[a] = base[a] + off[a];
      weight *= w[a][off[a]];
    }
    const Index i = grid.ravel(probe);
    if (!valid[i]) return false;
    acc += weight * f[i];
    int a = 0;
    while (a < n && ++off[a] == 4) off[a++] = 0;
    if (a == n) break;
  }
  out = acc;
  return true;
}

int default_transport_order(int n) { return n / 2 + 1; }

namespace {

// Central-difference radial derivative grad f . u_r where the axis neighbours are valid.
void radial_derivative(const ChartGrid& grid, const Eigen::VectorXd& f, const Mask& valid,
                       const std::vector<ChartVector>& radial, Index center, Eigen::VectorXd& out, Mask& out_valid) {
  const Index p = grid.points();
  out = Eigen::VectorXd::Constant(p, std::nan(""));
  out_valid.assign(p, 0);
  for (Index i = 0; i < p; ++i) {
    if (!valid[i]) continue;
    if (i == center) {
      out[i] = 0.0;
      out_valid[i] = 1;
      continue;
    }
    double acc = 0.0;
    bool ok = true;
    for (int a = 0; a < grid.n && ok; ++a) {
      const Index ip = grid.shifted(i, a, 1), im = grid.shifted(i, a, -1);
      ok = ip >= 0 && im >= 0 && valid[ip] && valid[im];
      if (ok) acc += radial[i][a] * (f[ip] - f[im]) / (2.0 * grid.h);
    }
    if (!ok) continue;
    out[i] = acc;
    out_valid[i] = 1;
  }
}

}  // namespace

CenterTransport center_transport(const MetricChart& chart, const ChartGrid& grid, const GridGeometry& geo,
                                 Index center, const TransportOptions& options) {
  const int n = grid.n;
  const Index p = grid.points();
  const int order = options.order < 0 ? default_transport_order(n) : options.order;
  if (2 * order <= n - 1) throw DomainError("center_transport: order must exceed (n - 1) / 2");
  if (options.simpson_nodes < 3 || options.simpson_nodes % 2 == 0)
    throw DomainError("center_transport: Simpson needs an odd number of nodes >= 3");

  CenterTransport ct;
  ct.center = center;
  ct.y = grid.point(center);
  ct.order = order;
  ct.geodesic_valid.assign(p, 0);
  ct.distance = Eigen::VectorXd::Constant(p, std::nan(""));
  ct.jacobian = Eigen::VectorXd::Constant(p, std::nan(""));
  ct.radial.assign(p, ChartVector::Zero(n));

  GeodesicOptions gopt = options.geodesic;
  gopt.samples = options.simpson_nodes;
  gopt.variational = true;
  const double det_y = chart.g(ct.y).determinant();

  std::vector<std::vector<ChartVector>> paths(p);
  std::vector<ChartVector> xi(p);
  std::vector<ChartMatrix> dexp(p);
  std::vector<unsigned char> seen(p, 0);
  std::vector<Index> parents(p, -1);
  std::deque<std::pair<Index, Index>> queue;  // (point, parent)
  queue.emplace_back(center, -1);
  seen[center] = 1;
  while (!queue.empty()) {
    const auto [i, parent] = queue.front();
    queue.pop_front();
    parents[i] = parent;
    const ChartVector x = grid.point(i);
    try {
      ShootingResult shot;
      if (parent < 0) {
        const ChartVector zero = ChartVector::Zero(n);
        shot = log_map(chart, ct.y, x, &zero, gopt, options.position_tol);
      } else {
        const ChartVector step = grid.point(i) - grid.point(parent);
        const ChartVector lin = dexp[parent].partialPivLu().solve(step);
        ChartVector guess = xi[parent] + lin;
        // Along a straight line of parents the curvature term comes from the grandparent.
        const Index grand = parents[parent];
        if (grand >= 0 && (grid.point(parent) - grid.point(grand) - step).norm() <= 1e-12 * grid.h)
          guess = xi[grand] + 2.0 * lin;
        shot = log_map(chart, ct.y, x, &guess, gopt, options.position_tol);
      }
      xi[i] = shot.xi;
      dexp[i] = shot.path.dexp;
      paths[i] = std::move(shot.path.samples);
      ct.distance[i] = shot.distance;
      ct.jacobian[i] = std::sqrt(chart.g(shot.path.end).determinant() / det_y) * std::abs(dexp[i].determinant());
      if (shot.distance > 0.0) ct.radial[i] = shot.path.end_velocity / shot.distance;
      ct.geodesic_valid[i] = ct.jacobian[i] > 0.0 && std::isfinite(ct.jacobian[i]);
    } catch (const DomainExitError&) {
    } catch (const ConvergenceError&) {
    }
    if (!ct.geodesic_valid[i]) continue;
    for (int a = 0; a < n; ++a)
      for (int step : {-1, 1}) {
        const Index j = grid.shifted(i, a, step);
        if (j < 0 || seen[j]) continue;
        if ((grid.point(j) - ct.y).lpNorm<Eigen::Infinity>() > options.reach) continue;
        seen[j] = 1;
        queue.emplace_back(j, i);
      }
  }

  ct.alpha.resize(order + 1);
  ct.alpha_valid.resize(order + 1);
  ct.laplacian.resize(order + 1);
  ct.laplacian_valid.resize(order + 1);
  ct.alpha[0] = Eigen::VectorXd::Constant(p, std::nan(""));
  for (Index i = 0; i < p; ++i)
    if (ct.geodesic_valid[i]) ct.alpha[0][i] = 1.0 / std::sqrt(ct.jacobian[i]);
  ct.alpha_valid[0] = ct.geodesic_valid;

  const Eigen::VectorXd weights = simpson_weights(options.simpson_nodes, 1.0);
  const int m = options.simpson_nodes;
  for (int nu = 0; nu <= order; ++nu) {
    ct.laplacian[nu] = grid_laplacian(grid, geo, ct.alpha[nu], ct.alpha_valid[nu], &ct.laplacian_valid[nu]);
    if (nu == order) break;
    // beta = alpha_0^{-1} Delta_g alpha_nu
    Eigen::VectorXd beta = ct.laplacian[nu].cwiseQuotient(ct.alpha[0]);
    const Mask& bvalid = ct.laplacian_valid[nu];
    Eigen::VectorXd next = Eigen::VectorXd::Constant(p, std::nan(""));
    Mask nvalid(p, 0);
    for (Index i = 0; i < p; ++i) {
      if (!ct.geodesic_valid[i]) continue;
      double acc = 0.0;
      bool ok = true;
      for (int k = 0; k < m && ok; ++k) {
        const double t = static_cast<double>(k) / (m - 1);
        const double tp = std::pow(t, nu);  // t^{(nu+1)-1}
        if (tp == 0.0) continue;
        double b = 0.0;
        ok = grid_interpolate(grid, beta, bvalid, paths[i][k], b);
        acc += weights[k] * tp * b;
      }
      if (!ok) continue;
      next[i] = ct.alpha[0][i] * acc;
      nvalid[i] = 1;
    }
    ct.alpha[nu + 1] = std::move(next);
    ct.alpha_valid[nu + 1] = std::move(nvalid);
  }
  if (!ct.laplacian_valid[order][center])
    throw BoundaryError("center_transport: finite-difference stencil leaves the grid at the centre");

  ct.alpha_dr.resize(order + 1);
  ct.alpha_dr_valid.resize(order + 1);
  for (int nu = 0; nu <= order; ++nu)
    radial_derivative(grid, ct.alpha[nu], ct.alpha_valid[nu], ct.radial, center, ct.alpha_dr[nu],
                      ct.alpha_dr_valid[nu]);
  return ct;
}

TransportCoefficients transport_coefficients(const MetricChart& chart, const ChartGrid& grid,
                                             const std::vector<Index>& centers, const TransportOptions& options,
                                             int workers) {
  TransportCoefficients tc;
  tc.grid = grid;
  tc.geometry = grid_geometry(chart, grid);
  tc.order = options.order < 0 ? default_transport_order(grid.n) : options.order;
  tc.centers.resize(centers.size());
  parallel_for(static_cast<long>(centers.size()), workers, [&](long c) {
    tc.centers[c] = center_transport(chart, grid, tc.geometry, centers[c], options);
  });
  return tc;
}

}  // namespace resolab
