#pragma once

// Conjugated Laplacian on T x T^{n-1} with the limiting weight x_1: symbols,
// the multiplier inverse G_tau, dyadic blocks in j, the frozen-coefficient
// error a_jk, cluster probes and the end-to-end weighted ratio.
//
// Axis 0 of every TorusGrid is x_1 (frequency j); axes 1.. carry k' with
// lambda_k = |k'|^2.

#include <vector>

#include "resolab/common.hpp"
#include "resolab/opnorm.hpp"
#include "resolab/torus.hpp"

namespace resolab {

/// (j + 1/2)^2 + 2 i tau (j + 1/2) + lambda_k - tau^2
Complex carleman_s1(double j, double lambda_k, double tau);
/// (j + 1/2)^2 + i (2^nu + 1) tau + lambda_k - tau^2
Complex carleman_s2(double j, double lambda_k, double tau, int nu);

/// Sharp dyadic band in j: nu = 0 is {0}; nu >= 1 is 2^{nu-1} <= |j| < 2^nu.
struct LPBand {
  int nu;
  long lo, hi;  // |j| in [lo, hi)
  bool contains(long j) const { return std::abs(j) >= lo && std::abs(j) < hi; }
};
LPBand lp_band(int nu);
int lp_block_of(long j);

/// Multiplier route: s1(j, |k'|^2) on every represented, non-Nyquist frequency.
GridField conjugated_apply(const GridField& u, double tau);
/// Pointwise route: -e^{tau x_1 - i x_1/2} Delta (e^{-tau x_1 + i x_1/2} u), Delta spectral.
/// Only meaningful when u vanishes near the x_1 seam.
GridField conjugated_apply_direct(const GridField& u, double tau);

/// Divides each pi_jk component by s1. Throws DomainError for |tau| < 1.
GridField g_tau_apply(const GridField& f, double tau);

struct SymbolMin {
  double value;
  long j;
  double lambda_k;
};
/// min |s1| over the represented, non-Nyquist lattice of the grid.
SymbolMin s1_lattice_min(const TorusGrid& grid, double tau);

/// ((j + 1/2)^2 + |k'|^2 + z)^{-1}; throws SingularError when the symbol vanishes.
GridField shifted_resolvent_apply(const GridField& f, Complex z);

/// Frozen-coefficient error i tau (2^nu - 2j) 1_{[2^{nu-1}, 2^nu)}(j) / (s1 s2). Requires nu >= 1.
/// It equals 1/s1 - 1/s2, which is the negative of the R - G_tau multiplier.
Complex a_coeff(long j, double lambda_k, double tau, int nu);

/// Sum over m <= m_max of (1 + m) sup |a_jk^nu(tau)| over m <= sqrt(j^2 + lambda_k) < m + 1,
/// by exact scan of Z x Z^{n-1}. Requires m_max >= 4 |tau|.
double error_sum_bound(double tau, int nu, int m_max, int n = 3);

/// Sharp truncations to the bands nu = 0 .. nu_max, nu_max being the band of N_0/2
/// (the Nyquist row is kept so that the blocks sum to u).
std::vector<GridField> littlewood_paley_blocks(const GridField& u);
GridField lp_block(const GridField& u, int nu);

/// Power-iteration lower bound of |chi_m|_{p -> q} on the grid's torus.
/// (p, q) must be (2, 2n/(n-2)) or (2n/(n+2), 2).
NormEstimate cluster_norm_probe(const TorusGrid& grid, int m, double p, double q, const PowerIterOptions& options = {});

struct ClusterGrowth {
  std::vector<int> m;
  std::vector<NormEstimate> estimates;
  double exponent;  // least-squares slope of log norm vs log(1 + m), over nonzero norms
};
ClusterGrowth cluster_growth(const TorusGrid& grid, int m_max, double p, double q, const PowerIterOptions& options = {},
                             int workers = 1);

struct CarlemanRatio {
  double ratio;
  double num_norm;  // |e^{tau (x_1 - x_ref)} u|_{2n/(n-2)}
  double den_norm;  // |e^{tau (x_1 - x_ref)} P u|_{2n/(n+2)}
  double x_ref;     // common weight normalization; cancels in the ratio
};

/// Weighted ratio with P = d^2_{x_1} + Delta' applied spectrally. u must vanish on
/// the rows within seam_margin of x_1 = 0 (DomainError otherwise). Since P is local,
/// Pu is restricted to the x_1 rows of supp u widened by seam_margin; outside them
/// the spectral derivative carries only round-off, which the weight would amplify.
CarlemanRatio carleman_ratio(const GridField& u, double tau, int seam_margin = 1);

/// exp(1 - 1/(1 - t^2)) in t = (x_1 - pi)/(pi/2), times prod_a (1 + cos(x_a)/2) transversally.
GridField carleman_bump(const TorusGrid& grid);
/// The x_1 profile of carleman_bump times e^{i j x_1} e^{i k x_2}.
GridField carleman_mode(const TorusGrid& grid, int j, int k);

/// Re sqrt(-tau^2 + i rho tau) evaluated directly.
double carleman_re_sqrt(double tau, double rho);
/// Closed-form estimate tau sqrt((sqrt(tau^2 + rho^2) - 1) / 2); disagrees with carleman_re_sqrt.
double carleman_re_sqrt_as_printed(double tau, double rho);

}  // namespace resolab
