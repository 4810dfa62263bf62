#include "resolab/bessel.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "resolab/quadrature.hpp"
#include "resolab/region.hpp"

namespace resolab {

namespace {

// Below exp(-745) a double underflows to zero.
constexpr double kUnderflowExponent = 745.0;

// After factoring exp(-w) and rotating u = cosh t - 1 onto the steepest
// descent ray u = s^2 e^{-i phi} / |w|, the integrand is
// 2 e^{-i phi/2} e^{-s^2} cosh(m t(u)) / (sqrt(|w|) sqrt(u + 2)).
BesselEval k_scaled_quadrature(double m, Complex w, double tol) {
  if (!(w.real() > 0.0)) throw DomainError("bessel_k: requires Re w > 0");
  if (!(tol > 0.0)) throw DomainError("bessel_k: tolerance must be positive");
  m = std::abs(m);
  const double modulus = std::abs(w);
  const double phi = std::arg(w);
  const Complex rot = std::polar(1.0, -phi);
  const Complex half_rot = std::polar(1.0, -0.5 * phi);
  const Complex prefactor = 2.0 * half_rot / std::sqrt(modulus);

  // cosh(m t) grows like (2u)^m; push the cutoff past that growth too.
  double s_max2 = kUnderflowExponent;
  for (int it = 0; it < 3; ++it)
    s_max2 = kUnderflowExponent + m * std::log(2.0 * s_max2 / modulus + 4.0);
  const double s_max = std::sqrt(s_max2);

  auto integrand = [&](double s) -> Complex {
    const double g = std::exp(-s * s);
    if (g == 0.0) return 0.0;
    const Complex u = (s * s / modulus) * rot;
    const Complex t = 2.0 * std::asinh(std::sqrt(0.5 / modulus) * s * half_rot);
    const Complex ch = m == 0.0 ? Complex(1.0) : std::cosh(m * t);
    return g * ch / std::sqrt(u + 2.0);
  };
  QuadratureResult q = tanh_sinh(integrand, 0.0, s_max, 0.25 * tol, 12);
  const Complex value = prefactor * q.value;
  const double err = std::abs(prefactor) * q.est_err;
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
    throw NumericalError("bessel_k: non-finite value");
  if (err > tol * std::abs(value)) throw ConvergenceError("bessel_k: tolerance not reached", err / std::abs(value));
  return {m, w, value, err};
}

}  // namespace

BesselEval bessel_k_scaled(double m, Complex w, double tol) { return k_scaled_quadrature(m, w, tol); }

BesselEval bessel_k(double m, Complex w, double tol) {
  BesselEval e = k_scaled_quadrature(m, w, tol);
  const Complex factor = std::exp(-w);
  e.value *= factor;
  e.est_err *= std::abs(factor);
  return e;
}

double c_nu_closed_form(int n, int nu) {
  return std::pow(2.0, -nu) * std::pow(2.0 * kPi, -0.5 * n);
}

Complex f_nu_heat_oracle(int n, int nu, double r, Complex z) {
  if (!(z.real() > 0.0)) throw DomainError("f_nu_heat_oracle: requires Re z > 0");
  if (!(r > 0.0)) throw DomainError("f_nu_heat_oracle: requires r > 0");
  // t = e^s; the integrand decays doubly exponentially at both ends, so the
  // trapezoid rule in s converges geometrically.
  const double a = nu - 0.5 * n + 1.0;
  const double centre = 0.5 * std::log(r * r / (4.0 * std::abs(z)));
  const double step = 0.01;
  Complex sum = 0.0;
  for (double s = centre - 40.0; s <= centre + 40.0; s += step) {
    const double t = std::exp(s);
    const Complex expo = a * s - z * t - r * r / (4.0 * t);
    if (expo.real() < -kUnderflowExponent) continue;
    sum += std::exp(expo);
  }
  return sum * step * std::pow(4.0 * kPi, -0.5 * n);
}

double c_nu_constant(int n, int nu) {
  if (n < 2) throw DomainError("c_nu_constant: dimension must be >= 2");
  if (nu < 0) throw DomainError("c_nu_constant: nu must be >= 0");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, double> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({n, nu});
  if (it != cache.end()) return it->second;

  const double c = c_nu_closed_form(n, nu);
  const double mu = 0.5 * n - 1.0 - nu;
  const std::pair<double, Complex> samples[] = {{1.0, Complex(1.0, 0.0)}, {0.7, Complex(2.0, 1.0)}};
  for (const auto& [r, z] : samples) {
    const Complex sz = sqrt_principal(z);
    const Complex bessel = bessel_k(mu, sz * r, 1e-13).value;
    const Complex shape = std::pow(r, -0.5 * n + nu + 1.0) * std::pow(sz, 2.0 * mu) * std::pow(sz, -mu) * bessel;
    const Complex oracle = f_nu_heat_oracle(n, nu, r, z);
    const double rel = std::abs(c * shape - oracle) / std::abs(oracle);
    if (!(rel < 1e-8)) throw CalibrationError("c_nu_constant: closed form disagrees with Fourier oracle");
  }
  cache.emplace(std::make_pair(n, nu), c);
  return c;
}

FNuParams make_fnu_params(int n, int nu) { return {n, nu, c_nu_constant(n, nu)}; }

namespace {

// c_nu z^{mu/2} r^{-mu} as (sqrt z)^mu r^{-mu}, principal branch throughout.
Complex power_prefactor(double r, Complex sz, double mu, double c) {
  return c * std::pow(sz, mu) * std::pow(r, -mu);
}

}  // namespace

FNuEval f_nu_eval(double r, Complex z, const FNuParams& params, double tol) {
  if (!(r > 0.0)) throw DomainError("f_nu: requires r > 0");
  const Complex sz = sqrt_principal(z);
  const double mu = 0.5 * params.n - 1.0 - params.nu;
  const BesselEval k = bessel_k(mu, sz * r, tol);
  const Complex pre = power_prefactor(r, sz, mu, params.c_nu);
  return {pre * k.value, std::abs(pre) * k.est_err};
}

Complex f_nu(double r, Complex z, const FNuParams& params, double tol) {
  return f_nu_eval(r, z, params, tol).value;
}

Complex f_nu_dr(double r, Complex z, const FNuParams& params, double tol) {
  if (!(r > 0.0)) throw DomainError("f_nu_dr: requires r > 0");
  const Complex sz = sqrt_principal(z);
  const double mu = 0.5 * params.n - 1.0 - params.nu;
  // d/dx [x^{-mu} K_mu(x)] = -x^{-mu} K_{mu+1}(x)
  const Complex x = sz * r;
  const Complex k = bessel_k(mu + 1.0, x, tol).value;
  return -params.c_nu * std::pow(sz, 2.0 * mu) * std::pow(x, -mu) * k * sz;
}

FNuSplit f_nu_regime_split(double r, Complex z, const FNuParams& params) {
  if (!(r > 0.0)) throw DomainError("f_nu_regime_split: requires r > 0");
  const double modulus = std::abs(z);
  const FNuRegime regime = r <= 1.0 / std::sqrt(modulus) ? FNuRegime::small : FNuRegime::large;
  const Complex sz = sqrt_principal(z);
  const int n = params.n;
  const int nu = params.nu;
  const double mu = 0.5 * n - 1.0 - nu;
  const Complex ks = bessel_k_scaled(mu, sz * r).value;
  const Complex f_scaled = power_prefactor(r, sz, mu, params.c_nu) * ks;
  const double gain = std::pow(modulus, -0.25 * (n - 1) + 0.5 * (nu + 1)) * std::pow(r, 0.5 * (n - 1) - nu);
  return {regime, f_scaled * gain};
}

}  // namespace resolab
