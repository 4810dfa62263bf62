#include "resolab/region.hpp"

#include <cmath>

namespace resolab {

namespace {

bool on_closed_negative_axis(Complex z) { return z.imag() == 0.0 && z.real() <= 0.0; }

}  // namespace

Complex sqrt_principal(Complex z) {
  if (z.imag() == 0.0 && z.real() < 0.0)
    throw DomainError("sqrt_principal: z on the negative real axis");
  // Re = sqrt((Re z + |z|)/2); for Re z < 0 go through the imaginary part to
  // avoid cancellation.
  const double modulus = std::hypot(z.real(), z.imag());
  if (modulus == 0.0) return {0.0, 0.0};
  if (z.real() >= 0.0) {
    const double re = std::sqrt(0.5 * (modulus + z.real()));
    return {re, z.imag() / (2.0 * re)};
  }
  const double im = std::sqrt(0.5 * (modulus - z.real()));
  return {std::abs(z.imag()) / (2.0 * im), std::copysign(im, z.imag())};
}

bool in_xi_delta(Complex z, double delta) {
  if (on_closed_negative_axis(z)) throw DomainError("in_xi_delta: z on the closed negative real axis");
  if (!(delta > 0.0)) throw DomainError("in_xi_delta: delta must be positive");
  return sqrt_principal(z).real() >= delta;
}

bool in_xi_delta_parabola(Complex z, double delta) {
  if (on_closed_negative_axis(z)) throw DomainError("in_xi_delta: z on the closed negative real axis");
  if (!(delta > 0.0)) throw DomainError("in_xi_delta: delta must be positive");
  const double d2 = delta * delta;
  // Right of the vertex the inequality is automatic.
  if (z.real() >= d2) return true;
  return z.imag() * z.imag() >= 4.0 * d2 * (d2 - z.real());
}

bool in_xi_tilde_delta(Complex z, double delta) {
  if (on_closed_negative_axis(z)) throw DomainError("in_xi_tilde_delta: z on the closed negative real axis");
  if (z.real() < 0.0) return std::abs(z.imag()) >= delta;
  return std::abs(z) > delta;
}

SpectralParameter::SpectralParameter(Complex z_, double delta_) : z(z_), delta(delta_) {
  if (z.imag() == 0.0 && z.real() < 0.0) throw DomainError("SpectralParameter: z on the negative real axis");
  if (!(delta > 0.0)) throw DomainError("SpectralParameter: delta must be positive");
}

std::string_view to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::trapezium: return "trapezium";
    case RegionLabel::pentagon: return "pentagon";
    case RegionLabel::upper_trapezium: return "upper_trapezium";
    case RegionLabel::lower_trapezium: return "lower_trapezium";
    case RegionLabel::outside: return "outside";
  }
  return "outside";
}

}  // namespace resolab
