#include "resolab/parametrix.hpp"

#include <cmath>

#include "resolab/bessel.hpp"
#include "resolab/parallel.hpp"
#include "resolab/quadrature.hpp"
#include "resolab/region.hpp"

namespace resolab {

Complex diagonal_cell_average(const std::function<Complex(double)>& f, const ChartMatrix& g, double h, int order) {
  const int n = static_cast<int>(g.rows());
  const ChartMatrix a = Eigen::SelfAdjointEigenSolver<ChartMatrix>(g).operatorSqrt();
  const GaussRule rule = gauss_legendre(order);
  // Radial factor s^{n-1} ds with s = u^2 becomes 2 u^{2n-1} du on [0, 1].
  std::vector<double> un(order), uw(order);
  for (int i = 0; i < order; ++i) {
    un[i] = 0.5 * (rule.nodes[i] + 1.0);
    uw[i] = 0.5 * rule.weights[i] * 2.0 * std::pow(un[i], 2 * n - 1);
  }
  Complex total = 0.0;
  const double half = 0.5 * h;
  for (int axis = 0; axis < n; ++axis)
    for (double sign : {-1.0, 1.0}) {
      // Tensor Gauss-Legendre over the face.
      std::vector<int> idx(n - 1, 0);
      for (;;) {
        ChartVector p(n);
        double w = half;  // d xi_axis / ds
        int k = 0;
        for (int c = 0; c < n; ++c) {
          if (c == axis) {
            p[c] = sign * half;
            continue;
          }
          p[c] = half * rule.nodes[idx[k]];
          w *= half * rule.weights[idx[k]];
          ++k;
        }
        const double len = (a * p).norm();
        Complex radial = 0.0;
        for (int i = 0; i < order; ++i) radial += uw[i] * f(un[i] * un[i] * len);
        total += w * radial;
        int c = 0;
        while (c < n - 1 && ++idx[c] == order) idx[c++] = 0;
        if (c == n - 1) break;
      }
    }
  return total / std::pow(h, n);
}

namespace {

void check_spectral_parameter(Complex z) {
  if (z.imag() == 0.0 && z.real() <= 0.0) throw DomainError("parametrix: z must lie off the closed negative axis");
  if (std::abs(z) < 1.0) throw DomainError("parametrix: requires |z| >= 1");
}

// F_nu and d_r F_nu sampled on a uniform grid in s = log r, stored as
// r^{n-2} e^{sqrt(z) r} F and r^{n-1} e^{sqrt(z) r} d_r F, read back by
// cubic Lagrange interpolation. Direct evaluation below r_min.
class RadialTable {
 public:
  RadialTable(const FNuParams& params, Complex z, double r_min, double r_max, double ds, double tol)
      : params_(params), z_(z), root_(std::sqrt(z)), tol_(tol), s0_(std::log(r_min) - ds), ds_(ds) {
    const int count = static_cast<int>(std::ceil((std::log(r_max) - s0_) / ds)) + 3;
    value_.resize(count);
    slope_.resize(count);
    for (int i = 0; i < count; ++i) {
      const double r = std::exp(s0_ + i * ds_);
      const Complex scale = std::exp(root_ * r);
      value_[i] = std::pow(r, params.n - 2) * scale * f_nu(r, z, params, tol);
      slope_[i] = std::pow(r, params.n - 1) * scale * f_nu_dr(r, z, params, tol);
    }
  }

  Complex value(double r) const { return read(value_, r, params_.n - 2, false); }
  Complex slope(double r) const { return read(slope_, r, params_.n - 1, true); }

 private:
  Complex read(const std::vector<Complex>& t, double r, int power, bool derivative) const {
    const double u = (std::log(r) - s0_) / ds_;
    const int i = static_cast<int>(std::floor(u)) - 1;
    if (i < 0 || i + 3 >= static_cast<int>(t.size()))
      return derivative ? f_nu_dr(r, z_, params_, tol_) : f_nu(r, z_, params_, tol_);
    const double x = u - (i + 1);  // in [0, 1) between nodes i+1 and i+2
    const double w0 = -x * (x - 1.0) * (x - 2.0) / 6.0;
    const double w1 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
    const double w2 = -(x + 1.0) * x * (x - 2.0) / 2.0;
    const double w3 = (x + 1.0) * x * (x - 1.0) / 6.0;
    const Complex g = w0 * t[i] + w1 * t[i + 1] + w2 * t[i + 2] + w3 * t[i + 3];
    return g * std::exp(-root_ * r) / std::pow(r, power);
  }

  FNuParams params_;
  Complex z_, root_;
  double tol_, s0_, ds_;
  std::vector<Complex> value_, slope_;
};

}  // namespace

ParametrixKernel assemble_parametrix(const TransportCoefficients& coeffs, const MetricChart& chart, Complex z,
                                     const ParametrixOptions& options) {
  check_spectral_parameter(z);
  const ChartGrid& grid = coeffs.grid;
  const int n = grid.n;
  const int order = coeffs.order;
  const Index p = grid.points();
  const Index cols = static_cast<Index>(coeffs.centers.size());
  std::vector<FNuParams> params;
  for (int nu = 0; nu <= order; ++nu) params.push_back(make_fnu_params(n, nu));
  const DistanceCutoff chi{options.rho};
  const double tol = options.bessel_tol;
  // Smallest radius the diagonal quadrature touches is about (u_min^2) h.
  std::vector<RadialTable> tables;
  for (int nu = 0; nu <= order; ++nu)
    tables.emplace_back(params[nu], z, 1e-6 * grid.h, options.rho, options.table_step, tol);

  ParametrixKernel k;
  k.grid = grid;
  k.z = z;
  k.rho = options.rho;
  k.order = order;
  k.source_weight.resize(cols);
  k.distance = Eigen::MatrixXd::Constant(p, cols, std::nan(""));
  k.cutoff = Eigen::MatrixXd::Zero(p, cols);
  k.kernel = Eigen::MatrixXcd::Zero(p, cols);
  k.s1 = Eigen::MatrixXcd::Zero(p, cols);
  k.s2 = Eigen::MatrixXcd::Zero(p, cols);
  k.hn = Eigen::MatrixXcd::Zero(p, cols);
  for (const auto& ct : coeffs.centers) k.sources.push_back(ct.center);

  parallel_for(cols, options.workers, [&](long c) {
    const CenterTransport& ct = coeffs.centers[c];
    k.source_weight[c] = coeffs.geometry.sqrt_det[ct.center] * grid.cell_volume();
    for (Index i = 0; i < p; ++i) {
      if (!ct.geodesic_valid[i]) continue;
      const double d = ct.distance[i];
      k.distance(i, c) = d;
      const double cut = chi(d);
      if (cut == 0.0) continue;
      k.cutoff(i, c) = cut;
      for (int a = 0; a < n; ++a)
        for (int step : {-1, 1}) {
          const Index j = grid.shifted(i, a, step);
          if (j >= 0 && !ct.geodesic_valid[j])
            throw BoundaryError("assemble_parametrix: transport region does not cover the cutoff support");
        }
      bool ok = ct.laplacian_valid[order][i];
      for (int nu = 0; nu <= order && ok; ++nu) ok = ct.alpha_valid[nu][i];
      if (!ok) throw BoundaryError("assemble_parametrix: transport coefficients undefined on the cutoff support");
      if (i == ct.center) continue;

      const bool annulus = chi.d1(d) != 0.0 || chi.d2(d) != 0.0;
      Complex f = 0.0, df = 0.0, fn = 0.0;
      for (int nu = 0; nu <= order; ++nu) {
        const Complex fv = tables[nu].value(d);
        f += ct.alpha[nu][i] * fv;
        if (nu == order) fn = fv;
        if (annulus) {
          if (!ct.alpha_dr_valid[nu][i])
            throw BoundaryError("assemble_parametrix: radial derivative undefined on the cutoff annulus");
          df += ct.alpha_dr[nu][i] * fv + ct.alpha[nu][i] * tables[nu].slope(d);
        }
      }
      k.kernel(i, c) = cut * f;
      const Complex h = ct.laplacian[order][i] * fn;
      k.hn(i, c) = h;
      k.s2(i, c) = -cut * h;
      if (annulus) {
        const double djj = -2.0 * ct.alpha_dr[0][i] / ct.alpha[0][i];  // d_r J / J
        const double lap_chi = chi.d2(d) + chi.d1(d) * ((n - 1) / d + djj);
        k.s1(i, c) = -2.0 * chi.d1(d) * df - lap_chi * f;
      }
    }
    // Diagonal cell: metric frozen at y.
    const Index y = ct.center;
    const ChartMatrix gy = chart.g(ct.y);
    auto total = [&](double r) {
      Complex acc = 0.0;
      for (int nu = 0; nu <= order; ++nu) acc += ct.alpha[nu][y] * tables[nu].value(r);
      return acc;
    };
    auto last = [&](double r) { return tables[order].value(r); };
    k.kernel(y, c) = diagonal_cell_average(total, gy, grid.h, options.cell_order);
    k.hn(y, c) = ct.laplacian[order][y] * diagonal_cell_average(last, gy, grid.h, options.cell_order);
    k.s2(y, c) = -k.hn(y, c);
  });
  return k;
}

std::vector<DyadicPiece> dyadic_decompose(const ParametrixKernel& k) {
  check_spectral_parameter(k.z);
  const double scale = std::sqrt(std::abs(k.z));
  double reach = 0.0;
  for (Index c = 0; c < k.cutoff.cols(); ++c)
    for (Index i = 0; i < k.cutoff.rows(); ++i)
      if (k.cutoff(i, c) > 0.0) reach = std::max(reach, k.distance(i, c));
  const int nu_max = reach * scale <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log2(reach * scale)));
  std::vector<DyadicPiece> pieces;
  for (int nu = 0; nu <= nu_max; ++nu) {
    DyadicPiece piece{nu, Eigen::MatrixXcd::Zero(k.kernel.rows(), k.kernel.cols())};
    for (Index c = 0; c < k.kernel.cols(); ++c)
      for (Index i = 0; i < k.kernel.rows(); ++i) {
        if (k.cutoff(i, c) == 0.0) continue;
        piece.kernel(i, c) = dyadic_cutoff(nu, scale * k.distance(i, c)) * k.kernel(i, c);
      }
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

namespace {

Eigen::VectorXcd source_values(const ParametrixKernel& k, const Eigen::VectorXcd& u) {
  if (u.size() != k.grid.points()) throw DomainError("parametrix_apply: field size does not match the grid");
  Mask is_source(u.size(), 0);
  for (Index s : k.sources) is_source[s] = 1;
  for (Index i = 0; i < u.size(); ++i)
    if (!is_source[i] && u[i] != Complex(0.0)) throw DomainError("parametrix_apply: u must vanish off the sources");
  Eigen::VectorXcd v(k.sources.size());
  for (std::size_t c = 0; c < k.sources.size(); ++c) v[c] = u[k.sources[c]] * k.source_weight[c];
  return v;
}

}  // namespace

Eigen::VectorXcd parametrix_apply(const ParametrixKernel& k, const Eigen::VectorXcd& u) {
  return k.kernel * source_values(k, u);
}

Eigen::VectorXcd remainder_apply(const ParametrixKernel& k, const Eigen::VectorXcd& u) {
  const Eigen::VectorXcd v = source_values(k, u);
  return k.s1 * v + k.s2 * v;
}

ResidualReport residual_apply(const ParametrixKernel& k, const MetricChart& chart, const GridGeometry& geo,
                              const Eigen::VectorXcd& u) {
  (void)chart;
  ResidualReport r;
  const Eigen::VectorXcd tu = parametrix_apply(k, u);
  const Mask all(tu.size(), 1);
  const Eigen::VectorXcd lap = grid_laplacian(k.grid, geo, tu, all, &r.valid);
  r.identity_side = -lap + k.z * tu - u;
  r.direct = remainder_apply(k, u);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < tu.size(); ++i) {
    if (!r.valid[i]) continue;
    num += geo.sqrt_det[i] * std::norm(r.identity_side[i] - r.direct[i]);
    den += geo.sqrt_det[i] * std::norm(r.direct[i]);
  }
  r.relative_l2 = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  r.resolution = k.grid.h * std::sqrt(std::abs(k.z));
  if (r.resolution > 0.5)
    r.diagnostic = "diagonal under-resolved: h |z|^{1/2} = " + std::to_string(r.resolution) + " > 0.5";
  return r;
}

double hn_sup(const ParametrixKernel& k) {
  double best = 0.0;
  for (Index c = 0; c < k.hn.cols(); ++c)
    for (Index i = 0; i < k.hn.rows(); ++i)
      if (k.cutoff(i, c) > 0.0) best = std::max(best, std::abs(k.hn(i, c)));
  return best;
}

TorusParametrix flat_torus_parametrix(const TorusGrid& grid, Complex z, double rho, double bessel_tol) {
  check_spectral_parameter(z);
  const int n = grid.dim();
  for (int a = 1; a < n; ++a)
    if (grid.size(a) != grid.size(0)) throw DomainError("flat_torus_parametrix: grid must be a cube");
  if (!(rho > 0.0 && rho < kPi)) throw DomainError("flat_torus_parametrix: rho must lie in (0, pi)");
  const double h = grid.spacing(0);
  const FNuParams f0 = make_fnu_params(n, 0);
  const DistanceCutoff chi{rho};
  GridField kf(grid), sf(grid);
  std::vector<int> idx(n);
  for (Index i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) {
      const double x = grid.frequency(a, idx[a]) * h;  // minimal image
      r2 += x * x;
    }
    const double r = std::sqrt(r2);
    if (r >= rho) continue;
    if (r == 0.0) {
      kf.values[i] = diagonal_cell_average([&](double s) { return f_nu(s, z, f0, bessel_tol); },
                                           ChartMatrix::Identity(n, n), h, 12);
      continue;
    }
    const Complex f = f_nu(r, z, f0, bessel_tol);
    kf.values[i] = chi(r) * f;
    if (chi.d1(r) != 0.0 || chi.d2(r) != 0.0)
      sf.values[i] = -2.0 * chi.d1(r) * f_nu_dr(r, z, f0, bessel_tol) - (chi.d2(r) + (n - 1) * chi.d1(r) / r) * f;
  }
  const double scale = std::sqrt(static_cast<double>(grid.points())) * grid.cell_volume();
  TorusParametrix tp;
  tp.grid = grid;
  tp.z = z;
  tp.rho = rho;
  tp.parametrix = {grid, fourier_forward(kf).coeffs * scale};
  tp.remainder = {grid, fourier_forward(sf).coeffs * scale};
  return tp;
}

GridField torus_parametrix_apply(const TorusParametrix& tp, const GridField& u) {
  return apply_multiplier(tp.parametrix, u);
}

GridField torus_remainder_apply(const TorusParametrix& tp, const GridField& u) {
  return apply_multiplier(tp.remainder, u);
}

GridField torus_remainder_adjoint(const TorusParametrix& tp, const GridField& u) {
  return apply_multiplier(LatticeMultiplier{tp.grid, tp.remainder.symbol.conjugate()}, u);
}

double torus_identity_defect(const TorusParametrix& tp, int band) {
  const TorusGrid& g = tp.grid;
  const Eigen::VectorXd k2 = squared_frequency(g);
  std::vector<int> idx(g.dim());
  double worst = 0.0, scale = 0.0;
  for (Index i = 0; i < g.points(); ++i) {
    g.unravel(i, idx);
    int linf = 0;
    for (int a = 0; a < g.dim(); ++a) linf = std::max(linf, std::abs(g.frequency(a, idx[a])));
    if (linf == 0 || linf >= band) continue;
    const Complex lhs = (k2[i] + tp.z) * tp.parametrix.symbol[i] - 1.0;
    worst = std::max(worst, std::abs(lhs - tp.remainder.symbol[i]));
    scale = std::max(scale, std::abs(tp.remainder.symbol[i]));
  }
  return scale > 0.0 ? worst / scale : worst;
}

double remainder_growth_exponent(int n, double p, double q) {
  if (n < 2) throw DomainError("remainder_growth_exponent: n must be >= 2");
  if (!(p >= 1.0 && p <= 2.0 && q >= 2.0)) throw DomainError("remainder_growth_exponent: requires 1 <= p <= 2 <= q");
  const double ip = 1.0 / p;
  const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
  const double ipd = 1.0 - ip;
  const double lower = (n - 1.0) / (n + 1.0) * ipd;
  const double upper = (n + 1.0) / (n - 1.0) * ipd;
  if (iq <= lower) return 0.25 * (n - 1) - 0.5 * n * iq;
  if (iq >= upper) return 0.25 * (n - 1) - 0.5 * n * ipd;
  return 0.25 * (n - 1) * (ip - iq);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need two or more matching samples");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("loglog_slope: samples must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  if (!(den > 0.0)) throw DomainError("loglog_slope: abscissae must differ");
  return (m * sxy - sx * sy) / den;
}

RemainderSweep remainder_norm_sweep(const TorusGrid& grid, std::span<const Complex> zs, double p, double q,
                                    double rho, const PowerIterOptions& options) {
  RemainderSweep sweep;
  sweep.p = p;
  sweep.q = q;
  sweep.predicted_exponent = remainder_growth_exponent(grid.dim(), p, q);
  std::vector<double> xs, ys;
  for (const Complex z : zs) {
    const TorusParametrix tp = flat_torus_parametrix(grid, z, rho);
    FieldOperator apply = [&](const GridField& u) { return torus_remainder_apply(tp, u); };
    FieldOperator adjoint = [&](const GridField& u) { return torus_remainder_adjoint(tp, u); };
    const NormEstimate e = opnorm_power_iter(apply, adjoint, grid, grid, p, q, options);
    sweep.rows.push_back({z, std::abs(z), e.lower_bound, e.iterations, e.converged});
    xs.push_back(std::abs(z));
    ys.push_back(e.lower_bound);
  }
  sweep.fitted_slope = xs.size() >= 2 ? loglog_slope(xs, ys) : std::nan("");
  return sweep;
}

double TorusPatching::cutoff(int j, std::span<const double> x) const {
  double v = 1.0;
  for (int a = 0; a < n; ++a) v *= (j >> a) & 1 ? circle.c1(x[a]) : circle.c0(x[a]);
  return v;
}

GridField patch_cutoff(const TorusPatching& patching, int j, const TorusGrid& grid) {
  if (grid.dim() != patching.n) throw DomainError("patch_cutoff: dimension mismatch");
  return sample(grid, [&](std::span<const double> x) { return Complex(patching.cutoff(j, x)); });
}

GridField patched_apply(const TorusPatching& patching, const FieldOperator& local, const GridField& u) {
  GridField out(u.grid);
  for (int j = 0; j < patching.count(); ++j) {
    const Eigen::VectorXcd c = patch_cutoff(patching, j, u.grid).values;
    const GridField piece = local(GridField(u.grid, c.cwiseProduct(u.values)));
    out.values += c.cwiseProduct(piece.values);
  }
  return out;
}

}  // namespace resolab
