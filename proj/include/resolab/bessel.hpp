#pragma once

// Modified Bessel function K_m with complex argument and the radial kernels
// F_nu(r, z) = c_nu r^{-n/2+nu+1} z^{n/4-(nu+1)/2} K_{n/2-1-nu}(sqrt(z) r).

#include "resolab/common.hpp"

namespace resolab {

struct BesselEval {
  double order;
  Complex arg;
  Complex value;
  double est_err;  // absolute
};

/// K_m(w) = int_0^inf exp(-w cosh t) cosh(m t) dt for Re w > 0.
BesselEval bessel_k(double m, Complex w, double tol = 1e-12);

/// exp(w) K_m(w), same quadrature without the exponential factor.
BesselEval bessel_k_scaled(double m, Complex w, double tol = 1e-12);

struct FNuParams {
  int n;
  int nu;
  double c_nu;
};

/// 2^{-nu} (2 pi)^{-n/2}.
double c_nu_closed_form(int n, int nu);

/// F_nu(r, z) from the Schwinger form
/// (4 pi)^{-n/2} int_0^inf t^{nu-n/2} exp(-t z - r^2/(4t)) dt, Re z > 0.
Complex f_nu_heat_oracle(int n, int nu, double r, Complex z);

/// Normalizing constant, checked once per (n, nu) against the heat-kernel
/// oracle at two samples and cached. Throws CalibrationError on mismatch.
double c_nu_constant(int n, int nu);

FNuParams make_fnu_params(int n, int nu);

struct FNuEval {
  Complex value;
  double est_err;
};

FNuEval f_nu_eval(double r, Complex z, const FNuParams& params, double tol = 1e-12);
Complex f_nu(double r, Complex z, const FNuParams& params, double tol = 1e-12);

/// d/dr F_nu(r, z) in closed form through K_{mu+1}.
Complex f_nu_dr(double r, Complex z, const FNuParams& params, double tol = 1e-12);

enum class FNuRegime { small, large };

struct FNuSplit {
  FNuRegime regime;
  // |z|^{-(n-1)/4+(nu+1)/2} e^{sqrt(z) r} r^{(n-1)/2-nu} F_nu; bounded in the large regime.
  Complex amplitude;
};

FNuSplit f_nu_regime_split(double r, Complex z, const FNuParams& params);

}  // namespace resolab
