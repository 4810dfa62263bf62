#include "resolab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace resolab {

bool MetricChart::contains(const ChartVector& x, double slack) const {
  for (int i = 0; i < n; ++i)
    if (!(x[i] >= lo[i] - slack && x[i] <= hi[i] + slack)) return false;
  return true;
}

MetricDerivatives MetricChart::derivatives(const ChartVector& x) const {
  if (dg) return dg(x);
  MetricDerivatives out;
  ChartVector xp = x, xm = x;
  for (int k = 0; k < n; ++k) {
    xp[k] = x[k] + fd_step;
    xm[k] = x[k] - fd_step;
    out[k] = (g(xp) - g(xm)) / (2.0 * fd_step);
    xp[k] = xm[k] = x[k];
  }
  return out;
}

namespace {

// Closed-form inverses for the common small dimensions.
ChartMatrix small_inverse(const ChartMatrix& m) {
  const Eigen::Index n = m.rows();
  if (n == 1) return ChartMatrix::Constant(1, 1, 1.0 / m(0, 0));
  if (n == 2) {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    ChartMatrix out(2, 2);
    out << m(1, 1) / det, -m(0, 1) / det, -m(1, 0) / det, m(0, 0) / det;
    return out;
  }
  if (n == 3) {
    ChartMatrix out(3, 3);
    out(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    out(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
    out(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    out(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
    out(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
    out(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
    out(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
    out(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
    out(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double det = m(0, 0) * out(0, 0) + m(0, 1) * out(1, 0) + m(0, 2) * out(2, 0);
    return out / det;
  }
  return m.inverse();
}

}  // namespace

Christoffel MetricChart::christoffel(const ChartVector& x) const {
  if (gamma) return gamma(x);
  const ChartMatrix ginv = small_inverse(g(x));
  const MetricDerivatives d = derivatives(x);
  // first(m, j, k) = (d_j g_mk + d_k g_mj - d_m g_jk) / 2
  double first[kMaxChartDim][kMaxChartDim][kMaxChartDim];
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) first[m][j][k] = 0.5 * (d[j](m, k) + d[k](m, j) - d[m](j, k));
  Christoffel out;
  for (int l = 0; l < n; ++l) {
    out[l].resize(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) acc += ginv(l, m) * first[m][j][k];
        out[l](j, k) = out[l](k, j) = acc;
      }
  }
  return out;
}

double MetricChart::norm(const ChartVector& x, const ChartVector& v) const {
  return std::sqrt(std::max(0.0, v.dot(g(x) * v)));
}

double MetricChart::probe_min_eigenvalue(int per_axis) const {
  double best = kInfinity;
  std::vector<int> idx(n, 0);
  for (;;) {
    ChartVector x(n);
    for (int i = 0; i < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (per_axis - 1);
    const ChartMatrix m = g(x);
    if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm()))
      throw DomainError("MetricChart: g is not symmetric");
    Eigen::SelfAdjointEigenSolver<ChartMatrix> eig(m);
    best = std::min(best, eig.eigenvalues().minCoeff());
    int a = 0;
    while (a < n && ++idx[a] == per_axis) idx[a++] = 0;
    if (a == n) break;
  }
  return best;
}

void MetricChart::validate(int per_axis) const {
  if (n < 1 || n > kMaxChartDim) throw DomainError("MetricChart: dimension must be in 1..4");
  if (lo.size() != n || hi.size() != n || !(lo.array() < hi.array()).all())
    throw DomainError("MetricChart: malformed box");
  if (!g) throw DomainError("MetricChart: metric callable missing");
  if (!(probe_min_eigenvalue(per_axis) > 0.0)) throw DomainError("MetricChart: g is not positive definite");
}

MetricChart flat_chart(int n, double half_width) {
  MetricChart c;
  c.n = n;
  c.lo = ChartVector::Constant(n, -half_width);
  c.hi = ChartVector::Constant(n, half_width);
  c.g = [n](const ChartVector&) { return ChartMatrix(ChartMatrix::Identity(n, n)); };
  c.dg = [n](const ChartVector&) {
    MetricDerivatives d;
    for (int k = 0; k < n; ++k) d[k] = ChartMatrix::Zero(n, n);
    return d;
  };
  c.gamma = [n](const ChartVector&) {
    Christoffel out;
    for (int l = 0; l < n; ++l) out[l] = ChartMatrix::Zero(n, n);
    return out;
  };
  c.spray_jacobian = [n](const ChartVector&, const ChartVector&) { return ChartMatrix(ChartMatrix::Zero(n, n)); };
  c.validate();
  return c;
}

MetricChart sphere_chart(int n, double half_width) {
  MetricChart c;
  c.n = n;
  c.lo = ChartVector::Constant(n, -half_width);
  c.hi = ChartVector::Constant(n, half_width);
  c.g = [n](const ChartVector& x) {
    const double s = 1.0 + x.squaredNorm();
    return ChartMatrix(ChartMatrix::Identity(n, n) * (4.0 / (s * s)));
  };
  c.dg = [n](const ChartVector& x) {
    const double s = 1.0 + x.squaredNorm();
    MetricDerivatives d;
    for (int k = 0; k < n; ++k) d[k] = ChartMatrix::Identity(n, n) * (-16.0 * x[k] / (s * s * s));
    return d;
  };
  // Conformal factor e^{2 phi}, phi = log 2 - log(1 + |x|^2).
  c.gamma = [n](const ChartVector& x) {
    const ChartVector dphi = -2.0 * x / (1.0 + x.squaredNorm());
    Christoffel out;
    for (int l = 0; l < n; ++l) {
      out[l] = ChartMatrix::Zero(n, n);
      for (int j = 0; j < n; ++j) {
        out[l](l, j) += dphi[j];
        out[l](j, l) += dphi[j];
        out[l](j, j) -= dphi[l];
      }
    }
    return out;
  };
  c.spray_jacobian = [n](const ChartVector& x, const ChartVector& v) {
    const double s = 1.0 + x.squaredNorm();
    const ChartMatrix hess = ChartMatrix::Identity(n, n) * (-2.0 / s) + (4.0 / (s * s)) * x * x.transpose();
    // Gamma(v, v) = 2 v (v . dphi) - |v|^2 dphi
    return ChartMatrix(2.0 * v * (v.transpose() * hess) - v.squaredNorm() * hess);
  };
  c.validate();
  return c;
}

double sphere_distance(const ChartVector& x, const ChartVector& y) {
  auto lift = [](const ChartVector& p) {
    const double s = 1.0 + p.squaredNorm();
    Eigen::VectorXd q(p.size() + 1);
    q.head(p.size()) = 2.0 * p / s;
    q[p.size()] = (1.0 - p.squaredNorm()) / s;
    return q;
  };
  const Eigen::VectorXd a = lift(x), b = lift(y);
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

namespace {

constexpr int kD = kMaxChartDim;

// Plain storage keeps the RK4 stages free of dynamic-size temporaries.
struct State {
  double x[kD] = {}, v[kD] = {};
  double X[kD][kD] = {}, V[kD][kD] = {};
};

// Points on the box faces stay admissible despite rounding.
double exit_slack(const MetricChart& chart) { return 1e-9 * chart.diameter(); }

ChartVector to_vector(const double* a, int n) {
  ChartVector out(n);
  for (int i = 0; i < n; ++i) out[i] = a[i];
  return out;
}

void spray(const Christoffel& gamma, const ChartVector& v, int n, double* out) {
  for (int l = 0; l < n; ++l) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) acc += gamma[l](j, k) * v[j] * v[k];
    out[l] = acc;
  }
}

void rhs(const MetricChart& chart, const State& s, bool variational, State& d) {
  const int n = chart.n;
  const ChartVector x = to_vector(s.x, n);
  if (!chart.contains(x, exit_slack(chart))) throw DomainExitError("geodesic left the chart box");
  const ChartVector v = to_vector(s.v, n);
  const Christoffel gamma = chart.christoffel(x);
  double acc[kD];
  spray(gamma, v, n, acc);
  for (int l = 0; l < n; ++l) {
    d.x[l] = s.v[l];
    d.v[l] = -acc[l];
  }
  if (!variational) return;
  // M(l, m) = d_m [Gamma^l(x)(v, v)], by central differences without a closed form.
  ChartMatrix m(n, n);
  if (chart.spray_jacobian) {
    m = chart.spray_jacobian(x, v);
  } else {
    const double eps = 1e-4;
    ChartVector xp = x, xm = x;
    double fp[kD], fm[kD];
    for (int k = 0; k < n; ++k) {
      xp[k] = x[k] + eps;
      xm[k] = x[k] - eps;
      spray(chart.christoffel(xp), v, n, fp);
      spray(chart.christoffel(xm), v, n, fm);
      for (int l = 0; l < n; ++l) m(l, k) = (fp[l] - fm[l]) / (2.0 * eps);
      xp[k] = xm[k] = x[k];
    }
  }
  // X' = V, V' = -M X - 2 Gamma(v, V)
  for (int l = 0; l < n; ++l) {
    double gv[kD];
    for (int k = 0; k < n; ++k) {
      double t = 0.0;
      for (int j = 0; j < n; ++j) t += v[j] * gamma[l](j, k);
      gv[k] = t;
    }
    for (int c = 0; c < n; ++c) {
      double mx = 0.0, bv = 0.0;
      for (int k = 0; k < n; ++k) {
        mx += m(l, k) * s.X[k][c];
        bv += gv[k] * s.V[k][c];
      }
      d.X[l][c] = s.V[l][c];
      d.V[l][c] = -mx - 2.0 * bv;
    }
  }
}

void axpy(const State& s, double h, const State& d, bool variational, int n, State& out) {
  for (int i = 0; i < n; ++i) {
    out.x[i] = s.x[i] + h * d.x[i];
    out.v[i] = s.v[i] + h * d.v[i];
  }
  if (!variational) return;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.X[i][j] = s.X[i][j] + h * d.X[i][j];
      out.V[i][j] = s.V[i][j] + h * d.V[i][j];
    }
}

}  // namespace

GeodesicPath integrate_geodesic(const MetricChart& chart, const ChartVector& y, const ChartVector& xi,
                                const GeodesicOptions& options) {
  const int n = chart.n;
  const bool var = options.variational;
  const double length = chart.norm(y, xi);
  int steps = std::max(options.min_steps, static_cast<int>(std::ceil(length / options.max_step_length)));
  const int stride_den = options.samples > 1 ? options.samples - 1 : 1;
  steps = (steps + stride_den - 1) / stride_den * stride_den;
  const int sample_every = steps / stride_den;

  State s;
  for (int i = 0; i < n; ++i) {
    s.x[i] = y[i];
    s.v[i] = xi[i];
    s.V[i][i] = 1.0;
  }
  GeodesicPath path;
  path.steps = steps;
  if (options.samples > 1) path.samples.reserve(options.samples);
  if (options.samples > 1) path.samples.push_back(y);
  const double h = 1.0 / steps;
  double drift = 0.0;
  State k1, k2, k3, k4, tmp;
  for (int i = 1; i <= steps; ++i) {
    rhs(chart, s, var, k1);
    axpy(s, 0.5 * h, k1, var, n, tmp);
    rhs(chart, tmp, var, k2);
    axpy(s, 0.5 * h, k2, var, n, tmp);
    rhs(chart, tmp, var, k3);
    axpy(s, h, k3, var, n, tmp);
    rhs(chart, tmp, var, k4);
    for (int a = 0; a < n; ++a) {
      s.x[a] += (h / 6.0) * (k1.x[a] + 2.0 * k2.x[a] + 2.0 * k3.x[a] + k4.x[a]);
      s.v[a] += (h / 6.0) * (k1.v[a] + 2.0 * k2.v[a] + 2.0 * k3.v[a] + k4.v[a]);
      if (!var) continue;
      for (int b = 0; b < n; ++b) {
        s.X[a][b] += (h / 6.0) * (k1.X[a][b] + 2.0 * k2.X[a][b] + 2.0 * k3.X[a][b] + k4.X[a][b]);
        s.V[a][b] += (h / 6.0) * (k1.V[a][b] + 2.0 * k2.V[a][b] + 2.0 * k3.V[a][b] + k4.V[a][b]);
      }
    }
    const ChartVector x = to_vector(s.x, n);
    if (!chart.contains(x, exit_slack(chart))) throw DomainExitError("geodesic left the chart box");
    if (options.samples > 1 && i % sample_every == 0) path.samples.push_back(x);
    if (length > 0.0 && (i % std::max(1, steps / 16) == 0 || i == steps))
      drift = std::max(drift, std::abs(chart.norm(x, to_vector(s.v, n)) - length) / length);
  }
  path.end = to_vector(s.x, n);
  path.end_velocity = to_vector(s.v, n);
  if (!path.end.allFinite() || !path.end_velocity.allFinite())
    throw NumericalError("integrate_geodesic: non-finite state");
  if (var) {
    path.dexp.resize(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) path.dexp(a, b) = s.X[a][b];
  }
  path.speed_drift = drift;
  return path;
}

ChartVector exp_map(const MetricChart& chart, const ChartVector& y, const ChartVector& theta, double r) {
  if (std::abs(chart.norm(y, theta) - 1.0) > 1e-10) throw DomainError("exp_map: theta must be g-unit");
  if (r < 0.0) throw DomainError("exp_map: r must be >= 0");
  return integrate_geodesic(chart, y, r * theta).end;
}

ShootingResult log_map(const MetricChart& chart, const ChartVector& y, const ChartVector& x, const ChartVector* guess,
                       const GeodesicOptions& options, double position_tol) {
  GeodesicOptions opt = options;
  opt.variational = true;
  ChartVector xi = guess ? *guess : ChartVector(x - y);
  GeodesicPath path;
  double err = kInfinity;
  bool have = false;
  ChartVector delta;
  double lambda = 1.0;
  for (int it = 1; it <= 50; ++it) {
    const ChartVector trial = have ? ChartVector(xi - lambda * delta) : xi;
    GeodesicPath p;
    double e = kInfinity;
    try {
      p = integrate_geodesic(chart, y, trial, opt);
      e = (p.end - x).norm();
    } catch (const DomainExitError&) {
      if (!have) throw;
    }
    if (!have || e < err) {
      xi = trial;
      path = std::move(p);
      err = e;
      have = true;
      lambda = 1.0;
      if (err <= position_tol) return {xi, chart.norm(y, xi), std::move(path), it};
      delta = path.dexp.partialPivLu().solve(path.end - x);
    } else {
      lambda *= 0.5;
    }
  }
  throw ConvergenceError("log_map: Newton shooting did not converge in 50 iterations", err);
}

double geodesic_distance(const MetricChart& chart, const ChartVector& x, const ChartVector& y) {
  return log_map(chart, y, x).distance;
}

double volume_jacobian(const MetricChart& chart, const ChartVector& y, const ChartVector& theta, double r) {
  if (std::abs(chart.norm(y, theta) - 1.0) > 1e-10) throw DomainError("volume_jacobian: theta must be g-unit");
  GeodesicOptions opt;
  opt.variational = true;
  const GeodesicPath p = integrate_geodesic(chart, y, r * theta, opt);
  return std::sqrt(chart.g(p.end).determinant() / chart.g(y).determinant()) * std::abs(p.dexp.determinant());
}

ChartVector unit_direction(const MetricChart& chart, const ChartVector& y, const ChartVector& v) {
  const double len = chart.norm(y, v);
  if (!(len > 0.0)) throw DomainError("unit_direction: zero vector");
  return v / len;
}

GeodesicPolarData polar_data(const MetricChart& chart, const ChartVector& y, const std::vector<double>& radii,
                             const std::vector<ChartVector>& directions) {
  GeodesicPolarData out;
  out.center = y;
  out.radii = radii;
  out.jacobian = Eigen::MatrixXd::Constant(directions.size(), radii.size(), std::nan(""));
  out.injectivity_estimate = radii.empty() ? 0.0 : radii.back();
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const ChartVector theta = unit_direction(chart, y, directions[d]);
    out.directions.push_back(theta);
    std::vector<ChartVector> pts;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      try {
        pts.push_back(exp_map(chart, y, theta, radii[i]));
        out.jacobian(d, i) = volume_jacobian(chart, y, theta, radii[i]);
      } catch (const DomainExitError&) {
        out.injectivity_estimate = std::min(out.injectivity_estimate, i > 0 ? radii[i - 1] : 0.0);
        break;
      }
      if (!(out.jacobian(d, i) > 0.0)) {
        out.injectivity_estimate = std::min(out.injectivity_estimate, i > 0 ? radii[i - 1] : 0.0);
        break;
      }
    }
    out.points.push_back(std::move(pts));
  }
  return out;
}

}  // namespace resolab
