#pragma once

// Hadamard parametrix T(z) with kernel chi(d) sum_nu alpha_nu F_nu(d, z), its
// dyadic pieces and the remainder S(z) = (-Delta_g + z) T(z) - chi.
// Chart kernels are dense (grid points x source points); the flat torus
// variant is a convolution applied through FFT.

#include <span>
#include <string>
#include <vector>

#include "resolab/cutoff.hpp"
#include "resolab/opnorm.hpp"
#include "resolab/torus.hpp"
#include "resolab/transport.hpp"

namespace resolab {

struct ParametrixOptions {
  double rho = 0.5;  // chi = 1 for d <= rho/2, 0 for d >= rho
  double bessel_tol = 1e-10;
  int cell_order = 12;  // Gauss-Legendre order of the diagonal-cell quadrature
  double table_step = 0.02;  // log-radius spacing of the interpolated F_nu tables
  int workers = 1;
};

struct ParametrixKernel {
  ChartGrid grid;
  Complex z;
  double rho = 0.0;
  int order = 0;
  std::vector<Index> sources;   // grid index of each column
  Eigen::VectorXd source_weight;  // sqrt(det g(y)) h^n
  Eigen::MatrixXd distance;     // rows: all grid points, NaN outside the transport region
  Eigen::MatrixXd cutoff;
  Eigen::MatrixXcd kernel;      // chi F, diagonal cell replaced by its cell average
  Eigen::MatrixXcd s1;          // -2 chi' d_r F - (Delta_g chi) F
  Eigen::MatrixXcd s2;          // -chi (Delta_g alpha_N) F_N
  Eigen::MatrixXcd hn;          // (Delta_g alpha_N) F_N on supp chi
};

/// Average of f(|A xi|) over the cell [-h/2, h/2]^n, A = g^{1/2}; pyramid
/// (Duffy) decomposition so integrable singularities at xi = 0 are handled.
Complex diagonal_cell_average(const std::function<Complex(double)>& f, const ChartMatrix& g, double h, int order);

/// Requires z off the closed negative axis and |z| >= 1. Throws BoundaryError
/// when the transport region does not cover supp chi.
ParametrixKernel assemble_parametrix(const TransportCoefficients& coeffs, const MetricChart& chart, Complex z,
                                     const ParametrixOptions& options = {});

struct DyadicPiece {
  int nu;
  Eigen::MatrixXcd kernel;
};

/// chi psi_nu(|z|^{1/2} d) F for nu = 0 .. nu_max, where nu = 0 uses
/// psi_0(r/2) and nu_max is the first piece reaching the largest distance on supp chi.
std::vector<DyadicPiece> dyadic_decompose(const ParametrixKernel& kernel);

/// T u on all grid points; u lives on the grid and must vanish off the sources.
Eigen::VectorXcd parametrix_apply(const ParametrixKernel& kernel, const Eigen::VectorXcd& u);
/// S u = (S1 + S2) u
Eigen::VectorXcd remainder_apply(const ParametrixKernel& kernel, const Eigen::VectorXcd& u);

struct ResidualReport {
  Eigen::VectorXcd identity_side;  // (-Delta_g + z) T u - u
  Eigen::VectorXcd direct;         // S u
  Mask valid;
  double relative_l2 = 0.0;        // |identity_side - direct| / |direct| in L^2(dV_g)
  double resolution = 0.0;         // h |z|^{1/2}
  std::string diagnostic;          // non-empty when the diagonal is under-resolved
};

ResidualReport residual_apply(const ParametrixKernel& kernel, const MetricChart& chart, const GridGeometry& geo,
                              const Eigen::VectorXcd& u);

/// max |(Delta_g alpha_N) F_N| over supp chi.
double hn_sup(const ParametrixKernel& kernel);

// Flat torus (R / 2 pi Z)^n: alpha_0 = 1, alpha_nu = 0 for nu >= 1.

struct TorusParametrix {
  TorusGrid grid;
  Complex z;
  double rho = 0.0;
  LatticeMultiplier parametrix;  // symbol of u -> chi F_0 * u
  LatticeMultiplier remainder;   // symbol of u -> s * u
};

/// rho must stay below pi so the cutoff fits in one period.
TorusParametrix flat_torus_parametrix(const TorusGrid& grid, Complex z, double rho, double bessel_tol = 1e-10);
GridField torus_parametrix_apply(const TorusParametrix& tp, const GridField& u);
GridField torus_remainder_apply(const TorusParametrix& tp, const GridField& u);
GridField torus_remainder_adjoint(const TorusParametrix& tp, const GridField& u);
/// max over 0 < |k|_inf < band of |(|k|^2 + z) T^(k) - 1 - S^(k)| / max |S^(k)|.
double torus_identity_defect(const TorusParametrix& tp, int band);

/// Predicted growth exponent of |S(z)|_{p -> q} in |z| (three regimes split by
/// the lines 1/q = (n-1)/(n+1) 1/p' and 1/q = (n+1)/(n-1) 1/p').
double remainder_growth_exponent(int n, double p, double q);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct RemainderRow {
  Complex z;
  double abs_z;
  double lower_bound;
  int iterations;
  bool converged;
};

struct RemainderSweep {
  double p, q;
  std::vector<RemainderRow> rows;
  double fitted_slope;
  double predicted_exponent;
};

RemainderSweep remainder_norm_sweep(const TorusGrid& grid, std::span<const Complex> zs, double p, double q,
                                    double rho, const PowerIterOptions& options = {});

// Global patching on the torus: chi_j(x) = prod_a c_{j_a}(x_a) over the 2^n
// sign patterns, with c_0^2 + c_1^2 = 1 on the circle, so sum chi_j^2 = 1.

struct TorusPatching {
  int n;
  CirclePartition circle{kPi / 4};

  int count() const { return 1 << n; }
  double cutoff(int j, std::span<const double> x) const;
};

GridField patch_cutoff(const TorusPatching& patching, int j, const TorusGrid& grid);
/// sum_j chi_j local(chi_j u)
GridField patched_apply(const TorusPatching& patching, const FieldOperator& local, const GridField& u);

}  // namespace resolab
