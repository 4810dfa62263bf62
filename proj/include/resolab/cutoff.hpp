#pragma once

// Smooth cutoffs built from the exp(-1/t) mollifier: the dyadic partition
// psi_0 + sum psi(2^{-nu} .) = 1, the distance cutoff chi and circle partitions.

namespace resolab {

/// Smooth step: 0 for t <= 0, 1 for t >= 1, with first and second derivatives.
struct StepValue {
  double value;
  double d1;
  double d2;
};
StepValue smooth_step(double t);

/// Even bump: 1 on |r| <= 1/2, 0 on |r| >= 1.
double psi0(double r);
/// Derivatives with respect to r.
double psi0_d1(double r);
double psi0_d2(double r);

/// psi0(r/2) - psi0(r), supported in 1/2 <= |r| <= 2.
double psi(double r);

/// Cutoff of the dyadic piece nu: psi0(r/2) for nu = 0, psi(2^{-nu} r) for nu >= 1.
double dyadic_cutoff(int nu, double r);

/// Distance cutoff chi(d) = psi0(d / rho), equal to 1 for d <= rho/2, 0 for d >= rho.
struct DistanceCutoff {
  double rho;

  double operator()(double d) const { return psi0(d / rho); }
  double d1(double d) const { return psi0_d1(d / rho) / rho; }
  double d2(double d) const { return psi0_d2(d / rho) / (rho * rho); }
};

/// Pair (c0, c1) on the circle with c0^2 + c1^2 = 1. c0 vanishes on the arc
/// centred at pi of half-width w, c1 on the arc centred at 0 of half-width w
/// (w < pi/2); transitions are smooth.
struct CirclePartition {
  double half_width;
  double c0(double t) const;
  double c1(double t) const;
};

}  // namespace resolab
