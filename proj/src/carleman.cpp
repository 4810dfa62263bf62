#include "resolab/carleman.hpp"

#include <cmath>

#include "resolab/parallel.hpp"

namespace resolab {

Complex carleman_s1(double j, double lambda_k, double tau) {
  const double a = j + 0.5;
  return {a * a + lambda_k - tau * tau, 2.0 * tau * a};
}

Complex carleman_s2(double j, double lambda_k, double tau, int nu) {
  const double a = j + 0.5;
  return {a * a + lambda_k - tau * tau, (std::ldexp(1.0, nu) + 1.0) * tau};
}

LPBand lp_band(int nu) {
  if (nu < 0) throw DomainError("lp_band: nu must be >= 0");
  if (nu == 0) return {0, 0, 1};
  return {nu, 1L << (nu - 1), 1L << nu};
}

int lp_block_of(long j) {
  long a = std::abs(j);
  int nu = 0;
  while (a > 0) {
    a >>= 1;
    ++nu;
  }
  return nu;
}

namespace {

double rest_squared(std::span<const int> k) {
  double s = 0.0;
  for (size_t a = 1; a < k.size(); ++a) s += double(k[a]) * k[a];
  return s;
}

void require_tau(double tau) {
  if (!(std::abs(tau) >= 1.0) || !std::isfinite(tau)) throw DomainError("carleman: |tau| must be >= 1");
}

double x1_of(const TorusGrid& g, int i) { return i * g.spacing(0); }

}  // namespace

GridField conjugated_apply(const GridField& u, double tau) {
  const LatticeMultiplier m = make_multiplier(u.grid, [tau](std::span<const int> k) {
    return carleman_s1(k[0], rest_squared(k), tau);
  });
  return apply_multiplier(m, u);
}

GridField conjugated_apply_direct(const GridField& u, double tau) {
  const TorusGrid& g = u.grid;
  const Index stride = g.stride(0);
  GridField w = u;
  for (Index i = 0; i < g.points(); ++i) {
    const double x1 = x1_of(g, static_cast<int>(i / stride));
    w.values[i] *= std::exp(Complex(-tau * x1, 0.5 * x1));
  }
  // -Delta = helmholtz(0); the leading minus sign cancels it
  GridField out = helmholtz_apply(w, 0.0);
  for (Index i = 0; i < g.points(); ++i) {
    const double x1 = x1_of(g, static_cast<int>(i / stride));
    out.values[i] *= std::exp(Complex(tau * x1, -0.5 * x1));
  }
  return out;
}

GridField g_tau_apply(const GridField& f, double tau) {
  require_tau(tau);
  const LatticeMultiplier m = make_multiplier(f.grid, [tau](std::span<const int> k) {
    return 1.0 / carleman_s1(k[0], rest_squared(k), tau);
  });
  return apply_multiplier(m, f);
}

SymbolMin s1_lattice_min(const TorusGrid& grid, double tau) {
  SymbolMin best{kInfinity, 0, 0.0};
  std::vector<int> idx(grid.dim()), k(grid.dim());
  for (Index i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    bool nyquist = false;
    for (int a = 0; a < grid.dim(); ++a) {
      k[a] = grid.frequency(a, idx[a]);
      nyquist = nyquist || grid.is_nyquist(a, k[a]);
    }
    if (nyquist) continue;
    const double lam = rest_squared(k);
    const double v = std::abs(carleman_s1(k[0], lam, tau));
    if (v < best.value) best = {v, k[0], lam};
  }
  return best;
}

GridField shifted_resolvent_apply(const GridField& f, Complex z) {
  bool singular = false;
  const LatticeMultiplier m = make_multiplier(f.grid, [z, &singular](std::span<const int> k) {
    const double a = k[0] + 0.5;
    const Complex s = a * a + rest_squared(k) + z;
    if (std::abs(s) < 1e-12) singular = true;
    return 1.0 / s;
  });
  if (singular) throw SingularError("shifted resolvent: symbol vanishes on the lattice");
  return apply_multiplier(m, f);
}

Complex a_coeff(long j, double lambda_k, double tau, int nu) {
  if (nu < 1) throw DomainError("a_coeff: nu must be >= 1");
  const LPBand band = lp_band(nu);
  if (j < band.lo || j >= band.hi) return 0.0;
  const Complex num(0.0, tau * (std::ldexp(1.0, nu) - 2.0 * j));
  return num / (carleman_s1(j, lambda_k, tau) * carleman_s2(j, lambda_k, tau, nu));
}

double error_sum_bound(double tau, int nu, int m_max, int n) {
  if (n < 2) throw DomainError("error_sum_bound: n must be >= 2");
  if (!(m_max >= 4.0 * std::abs(tau))) throw DomainError("error_sum_bound: need m_max >= 4 |tau|");
  if (nu < 1) throw DomainError("error_sum_bound: nu must be >= 1");
  const LPBand band = lp_band(nu);
  const long limit = long(m_max + 1) * (m_max + 1);  // j^2 + lambda < limit
  // sums of n - 1 squares below limit
  std::vector<char> reachable(limit, 0);
  reachable[0] = 1;
  for (int factor = 0; factor < n - 1; ++factor) {
    std::vector<char> next(limit, 0);
    for (long s = 0; s < limit; ++s) {
      if (!reachable[s]) continue;
      for (long c = 0; s + c * c < limit; ++c) next[s + c * c] = 1;
    }
    reachable.swap(next);
  }
  std::vector<double> sup(m_max + 1, 0.0);
  for (long j = band.lo; j < band.hi && j * j < limit; ++j) {
    for (long lam = 0; j * j + lam < limit; ++lam) {
      if (!reachable[lam]) continue;
      const long r2 = j * j + lam;
      long m = static_cast<long>(std::sqrt(static_cast<double>(r2)));
      while (m * m > r2) --m;
      while ((m + 1) * (m + 1) <= r2) ++m;
      sup[m] = std::max(sup[m], std::abs(a_coeff(j, static_cast<double>(lam), tau, nu)));
    }
  }
  double sum = 0.0;
  for (int m = 0; m <= m_max; ++m) sum += (1.0 + m) * sup[m];
  return sum;
}

GridField lp_block(const GridField& u, int nu) {
  const LPBand band = lp_band(nu);
  const LatticeMultiplier m = make_multiplier(u.grid, [band](std::span<const int> k) {
    return Complex(band.contains(k[0]) ? 1.0 : 0.0);
  });
  // make_multiplier zeroes Nyquist frequencies; restore the j = -N/2 row when it is in band
  Spectrum s = fourier_forward(u);
  Spectrum out{s.grid, m.symbol.cwiseProduct(s.coeffs)};
  const TorusGrid& g = u.grid;
  std::vector<int> idx(g.dim());
  for (Index i = 0; i < g.points(); ++i) {
    g.unravel(i, idx);
    bool nyquist = false;
    for (int a = 0; a < g.dim(); ++a) nyquist = nyquist || g.is_nyquist(a, g.frequency(a, idx[a]));
    if (nyquist && band.contains(g.frequency(0, idx[0]))) out.coeffs[i] = s.coeffs[i];
  }
  return fourier_inverse(out);
}

std::vector<GridField> littlewood_paley_blocks(const GridField& u) {
  const int top = lp_block_of(u.grid.size(0) / 2);
  std::vector<GridField> blocks;
  for (int nu = 0; nu <= top; ++nu) blocks.push_back(lp_block(u, nu));
  return blocks;
}

NormEstimate cluster_norm_probe(const TorusGrid& grid, int m, double p, double q, const PowerIterOptions& options) {
  const int n = grid.dim();
  if (n < 3) throw DomainError("cluster_norm_probe: n must be >= 3");
  const double crit = 2.0 * n / (n - 2.0), dual = 2.0 * n / (n + 2.0);
  const bool upper = p == 2.0 && std::abs(q - crit) <= 1e-12 * crit;
  const bool lower = q == 2.0 && std::abs(p - dual) <= 1e-12 * dual;
  if (!upper && !lower) throw DomainError("cluster_norm_probe: (p, q) must be (2, 2n/(n-2)) or (2n/(n+2), 2)");
  const LatticeMultiplier chi = cluster_multiplier(grid, m);
  const FieldOperator project = [chi](const GridField& u) { return apply_multiplier(chi, u); };
  return opnorm_power_iter(project, project, grid, grid, p, q, options);
}

ClusterGrowth cluster_growth(const TorusGrid& grid, int m_max, double p, double q, const PowerIterOptions& options,
                             int workers) {
  if (m_max < 2) throw DomainError("cluster_growth: need m_max >= 2");
  ClusterGrowth out;
  for (int m = 1; m <= m_max; ++m) out.m.push_back(m);
  out.estimates.resize(out.m.size());
  parallel_for(static_cast<long>(out.m.size()), workers,
               [&](long i) { out.estimates[i] = cluster_norm_probe(grid, out.m[i], p, q, options); });
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (size_t i = 0; i < out.m.size(); ++i) {
    if (!(out.estimates[i].lower_bound > 0.0)) continue;
    const double x = std::log(1.0 + out.m[i]), y = std::log(out.estimates[i].lower_bound);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) throw NumericalError("cluster_growth: fewer than two nonzero shells");
  out.exponent = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return out;
}

CarlemanRatio carleman_ratio(const GridField& u, double tau, int seam_margin) {
  const TorusGrid& g = u.grid;
  const int n = g.dim();
  if (n < 3) throw DomainError("carleman_ratio: n must be >= 3");
  if (!(std::abs(tau) >= 1.0) || !std::isfinite(tau)) throw DomainError("carleman_ratio: |tau| must be >= 1");
  if (seam_margin < 0) throw DomainError("carleman_ratio: seam_margin must be >= 0");
  const int rows = g.size(0);
  const Index stride = g.stride(0);
  auto row_max = [&](const GridField& f, int r) { return f.values.segment(Index(r) * stride, stride).cwiseAbs().maxCoeff(); };
  int first = -1, last = -1;
  for (int r = 0; r < rows; ++r) {
    if (row_max(u, r) == 0.0) continue;
    if (first < 0) first = r;
    last = r;
  }
  if (first < 0) throw DomainError("carleman_ratio: u vanishes identically");
  if (first <= seam_margin || last >= rows - 1 - seam_margin)
    throw DomainError("carleman_ratio: u must vanish near the x_1 seam");

  {
    // P is applied spectrally, and make_multiplier drops Nyquist rows
    const Spectrum s = fourier_forward(u);
    const Eigen::ArrayXd mag = s.coeffs.cwiseAbs().array();
    double nyq = 0.0;
    std::vector<int> idx(n);
    for (Index i = 0; i < g.points(); ++i) {
      g.unravel(i, idx);
      for (int a = 0; a < n; ++a)
        if (g.is_nyquist(a, g.frequency(a, idx[a]))) nyq = std::max(nyq, mag[i]);
    }
    if (nyq > 1e-10 * mag.maxCoeff()) throw DomainError("carleman_ratio: u has Nyquist content; refine the grid");
  }
  GridField pu = helmholtz_apply(u, 0.0);
  pu.values *= -1.0;
  const int lo = first - seam_margin, hi = last + seam_margin;
  for (int r = 0; r < rows; ++r)
    if (r < lo || r > hi) pu.values.segment(Index(r) * stride, stride).setZero();

  // Normalize the weight at the support edge it grows toward.
  const double x_ref = tau > 0 ? x1_of(g, hi) : x1_of(g, lo);
  GridField wu = u;
  for (int r = 0; r < rows; ++r) {
    const double w = std::exp(tau * (x1_of(g, r) - x_ref));
    wu.values.segment(Index(r) * stride, stride) *= w;
    pu.values.segment(Index(r) * stride, stride) *= w;
  }
  CarlemanRatio out;
  out.num_norm = lp_norm(wu, 2.0 * n / (n - 2.0));
  out.den_norm = lp_norm(pu, 2.0 * n / (n + 2.0));
  out.x_ref = x_ref;
  if (!std::isfinite(out.num_norm) || !std::isfinite(out.den_norm)) throw NumericalError("carleman_ratio: non-finite norm");
  if (!(out.den_norm > 0.0)) throw NumericalError("carleman_ratio: P u vanishes");
  out.ratio = out.num_norm / out.den_norm;
  return out;
}

namespace {

double x1_profile(double x1) {
  const double t = (x1 - kPi) / (kPi / 2);
  return std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0;
}

}  // namespace

GridField carleman_bump(const TorusGrid& grid) {
  return sample(grid, [](std::span<const double> x) {
    double v = x1_profile(x[0]);
    for (size_t a = 1; a < x.size(); ++a) v *= 1.0 + 0.5 * std::cos(x[a]);
    return Complex(v);
  });
}

GridField carleman_mode(const TorusGrid& grid, int j, int k) {
  if (grid.dim() < 2) throw DomainError("carleman_mode: need a transverse axis");
  return sample(grid, [j, k](std::span<const double> x) {
    return x1_profile(x[0]) * std::polar(1.0, j * x[0] + k * x[1]);
  });
}

double carleman_re_sqrt(double tau, double rho) { return std::sqrt(Complex(-tau * tau, rho * tau)).real(); }

double carleman_re_sqrt_as_printed(double tau, double rho) {
  return tau * std::sqrt((std::sqrt(tau * tau + rho * rho) - 1.0) / 2.0);
}

}  // namespace resolab
