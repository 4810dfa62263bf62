#pragma once

// Lower bounds for L^p -> L^q operator norms of matrix-free operators.

#include <cstdint>
#include <functional>
#include <vector>

#include "resolab/common.hpp"
#include "resolab/torus.hpp"

namespace resolab {

using VectorOperator = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

/// Uniformly weighted discrete measure: |u|_p = (weight sum |u_i|^p)^{1/p}.
struct DiscreteSpace {
  Index size;
  double weight;
};

double weighted_norm(const Eigen::VectorXcd& u, double p, double weight);

/// |v|^{r-1} sgn(v) / |v|_r^{r-1}; satisfies <J_r v, v> = |v|_r and |J_r v|_{r'} = 1.
Eigen::VectorXcd duality_map(const Eigen::VectorXcd& v, double r, double weight);

struct NormEstimate {
  double lower_bound = 0.0;
  int iterations = 0;      // iterations used by the best seed
  double residual = 0.0;   // relative change at the last step of the best seed
  int seed_count = 0;
  bool converged = false;
  Eigen::VectorXcd witness;  // input achieving lower_bound, normalized in L^p
};

struct PowerIterOptions {
  int seeds = 4;
  int max_iters = 500;
  double rel_tol = 1e-6;
  int patience = 3;
  std::uint64_t seed = 1;
  /// Tried before the random seeds; each counts as a seed.
  std::vector<Eigen::VectorXcd> initial_guesses;
  /// Optional random-start generator; defaults to i.i.d. complex normals.
  std::function<Eigen::VectorXcd(std::uint64_t)> random_start;
};

/// u <- J_{p'}(T* J_q(T u)); requires 1 < p <= 2 <= q < inf. The adjoint is
/// taken with respect to the weighted inner products of the two spaces.
NormEstimate opnorm_power_iter(const VectorOperator& apply, const VectorOperator& apply_adjoint, DiscreteSpace domain,
                               DiscreteSpace codomain, double p, double q, const PowerIterOptions& options = {});

/// Same for operators on torus fields, with weights h^n taken from the grids.
using FieldOperator = std::function<GridField(const GridField&)>;
NormEstimate opnorm_power_iter(const FieldOperator& apply, const FieldOperator& apply_adjoint, const TorusGrid& domain,
                               const TorusGrid& codomain, double p, double q, const PowerIterOptions& options = {});

/// Max of |A v|_q over |v|_p = 1 with unit weights: closed forms at p = 1 or
/// q = inf, otherwise 64-start projected gradient ascent on the L^2 sphere
/// through v = s |s|^{2/p-1}.
double dense_opnorm_oracle(const Eigen::MatrixXcd& a, double p, double q, std::uint64_t seed = 1, int starts = 64);

/// |est(T, p -> q) - est(T*, q' -> p')| / est(T, p -> q).
double duality_check(const VectorOperator& apply, const VectorOperator& apply_adjoint, DiscreteSpace domain,
                     DiscreteSpace codomain, double p, double q, const PowerIterOptions& options = {});

/// Dense matrix as a kernel operator (A u)_i = sum_j A_ij u_j w_dom, with its weighted adjoint.
std::pair<VectorOperator, VectorOperator> kernel_operator(const Eigen::MatrixXcd& kernel, double domain_weight,
                                                          double codomain_weight);

inline double dual_exponent(double p) { return std::isinf(p) ? 1.0 : (p == 1.0 ? kInfinity : p / (p - 1.0)); }

}  // namespace resolab
