#pragma once

// Spectral-parameter region, principal square root, admissible exponent
// polygons in the (1/p, 1/q) plane and the parametrix decay order.
//
// Exponent geometry is templated on the scalar so that the same code runs in
// floating point and in exact rational arithmetic (boost::rational).

#include <array>
#include <cstdint>
#include <string_view>

#include <boost/rational.hpp>

#include "resolab/common.hpp"

namespace resolab {

using Rational = boost::rational<std::int64_t>;

// ---------------------------------------------------------------------------
// Spectral parameter

/// Principal square root. Rejects the strictly negative real axis.
Complex sqrt_principal(Complex z);

/// Re sqrt(z) >= delta. Rejects the closed negative real axis.
bool in_xi_delta(Complex z, double delta);

/// Same region through the parabola inequality
/// (Im z)^2 >= 4 delta^2 (delta^2 - Re z).
bool in_xi_delta_parabola(Complex z, double delta);

/// Membership in the larger region where the resolvent question is open:
/// |Im z| >= delta when Re z < 0, |z| > delta when Re z >= 0.
bool in_xi_tilde_delta(Complex z, double delta);

struct SpectralParameter {
  Complex z;
  double delta;

  SpectralParameter(Complex z_, double delta_);
  bool in_xi() const { return in_xi_delta(z, delta); }
  bool in_xi_tilde() const { return in_xi_tilde_delta(z, delta); }
  Complex sqrt() const { return sqrt_principal(z); }
};

// ---------------------------------------------------------------------------
// Exponent pairs

template <typename Scalar>
struct ExponentPair {
  Scalar p;
  Scalar q;  // q == 0 encodes q = infinity when working with 1/q directly

  /// Dual exponent p' = p / (p - 1).
  Scalar p_dual() const { return p / (p - Scalar(1)); }
};

/// Resolvent exponents (2n/(n+2), 2n/(n-2)).
template <typename Scalar>
ExponentPair<Scalar> resolvent_exponents(int n) {
  if (n < 3) throw DomainError("resolvent_exponents: dimension must be >= 3");
  return {Scalar(2 * n) / Scalar(n + 2), Scalar(2 * n) / Scalar(n - 2)};
}

/// Point of the (1/p, 1/q) plane.
template <typename Scalar>
struct ExponentPoint {
  Scalar inv_p;
  Scalar inv_q;

  friend bool operator==(const ExponentPoint& a, const ExponentPoint& b) {
    return a.inv_p == b.inv_p && a.inv_q == b.inv_q;
  }
};

template <typename Scalar>
ExponentPoint<Scalar> midpoint(const ExponentPoint<Scalar>& a, const ExponentPoint<Scalar>& b) {
  return {(a.inv_p + b.inv_p) / Scalar(2), (a.inv_q + b.inv_q) / Scalar(2)};
}

/// Vertices of the admissible-exponent polygons. A, B, B', C, C', D, D', F
/// are closed-form; E and G are the p = 2 endpoints of the segments on the
/// lines q = (n+1)p'/(n-1) and q = p'.
template <typename Scalar>
struct RegionVertexTable {
  int n;
  ExponentPoint<Scalar> A, B, Bp, C, Cp, D, Dp, E, F, G;
};

template <typename Scalar>
RegionVertexTable<Scalar> vertex_table(int n) {
  if (n < 3) throw DomainError("vertex_table: dimension must be >= 3");
  const Scalar one(1), half = Scalar(1) / Scalar(2);
  const Scalar N(n);
  RegionVertexTable<Scalar> t;
  t.n = n;
  t.A = {one, Scalar(0)};
  t.B = {half + one / (Scalar(2) * N), Scalar(0)};
  t.Bp = {one, half - one / (Scalar(2) * N)};
  t.C = {half + one / (Scalar(2) * N), half - Scalar(3) / (Scalar(2) * N)};
  t.Cp = {half + Scalar(3) / (Scalar(2) * N), half - one / (Scalar(2) * N)};
  t.D = {half + one / (Scalar(2) * N), Scalar((n - 1) * (n - 1)) / Scalar(2 * n * (n + 1))};
  t.Dp = {Scalar(n * n + 4 * n - 1) / Scalar(2 * n * (n + 1)), half - one / (Scalar(2) * N)};
  t.E = {half, Scalar(n - 1) / Scalar(2 * (n + 1))};
  t.F = {half + one / Scalar(n + 1), half - one / Scalar(n + 1)};
  t.G = {half, half};
  return t;
}

// ---------------------------------------------------------------------------
// Decay order of the parametrix as a function of d = 1/p - 1/q

template <typename Scalar>
Scalar sigma_decay_first_branch(Scalar d, int n) {
  return -Scalar(n - 1) / Scalar(4) * d + Scalar(1) / Scalar(2);
}

template <typename Scalar>
Scalar sigma_decay_second_branch(Scalar d, int n) {
  return -Scalar(n) / Scalar(2) * d + Scalar(1);
}

template <typename Scalar>
Scalar sigma_decay(Scalar d, int n) {
  if (n < 3) throw DomainError("sigma_decay: dimension must be >= 3");
  if (d < Scalar(0) || d > Scalar(1)) throw DomainError("sigma_decay: d outside [0,1]");
  return d <= Scalar(2) / Scalar(n + 1) ? sigma_decay_first_branch(d, n)
                                        : sigma_decay_second_branch(d, n);
}

// ---------------------------------------------------------------------------
// Region classification

enum class RegionLabel {
  trapezium,
  pentagon,
  upper_trapezium,
  lower_trapezium,
  outside,
};

std::string_view to_string(RegionLabel label);

/// Classify a point of the (1/p, 1/q) plane. Inequalities are strict or
/// non-strict exactly as in the corresponding boundedness statements.
/// Checked in order: trapezium, pentagon, upper trapezium, lower trapezium.
template <typename Scalar>
RegionLabel classify_point(Scalar inv_p, Scalar inv_q, int n) {
  const Scalar zero(0), one(1), half = Scalar(1) / Scalar(2);
  if (inv_p > one || inv_p < half || inv_q > half || inv_q < zero)
    throw DomainError("classify: requires 1 <= p <= 2 <= q");
  const Scalar N(n);
  const Scalar d = inv_p - inv_q;
  const Scalar inv_p_dual = one - inv_p;

  // Scaling s in [0,1] exists iff 0 <= d <= 2/n.
  const bool scale_ok = d <= Scalar(2) / N;
  const Scalar lo = inv_p - half < half - inv_q ? inv_p - half : half - inv_q;
  if (scale_ok && lo > one / (Scalar(2) * N) && d > Scalar(2) / Scalar(n + 1))
    return RegionLabel::trapezium;

  const Scalar lower_line = Scalar(n - 1) / Scalar(n + 1) * inv_p_dual;
  const Scalar upper_line = Scalar(n + 1) / Scalar(n - 1) * inv_p_dual;
  if (d < Scalar(2) / Scalar(n + 1) && lower_line <= inv_q && inv_q <= upper_line)
    return RegionLabel::pentagon;

  if (scale_ok && inv_q <= lower_line && inv_p < half + one / (Scalar(2) * N))
    return RegionLabel::upper_trapezium;
  if (scale_ok && inv_q >= upper_line && inv_q > half - one / (Scalar(2) * N))
    return RegionLabel::lower_trapezium;
  return RegionLabel::outside;
}

/// Classify an exponent pair (p, q). Pass q = 0 for q = infinity.
template <typename Scalar>
RegionLabel classify_pair(Scalar p, Scalar q, int n) {
  if (p < Scalar(1) || p > Scalar(2)) throw DomainError("classify_pair: p outside [1,2]");
  const Scalar inv_q = q == Scalar(0) ? Scalar(0) : Scalar(1) / q;
  if (q != Scalar(0) && q < Scalar(2)) throw DomainError("classify_pair: q < 2");
  return classify_point(Scalar(1) / p, inv_q, n);
}

}  // namespace resolab
