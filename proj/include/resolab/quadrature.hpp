#pragma once

#include <functional>
#include <vector>

#include "resolab/common.hpp"

namespace resolab {

struct QuadratureResult {
  Complex value;
  double est_err;  // |difference between the last two refinement levels|
  int levels;
  bool converged;
};

/// Tanh-sinh quadrature of a complex integrand on [a, b] with level doubling.
/// Stops once the level difference is below rel_tol * |value| (or abs_floor).
QuadratureResult tanh_sinh(const std::function<Complex(double)>& f, double a, double b,
                           double rel_tol, int max_level = 10, double abs_floor = 0.0);

/// Gauss-Legendre nodes and weights on [-1, 1] by Golub-Welsch.
struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
GaussRule gauss_legendre(int order);

/// Composite Simpson weights for an odd number of equispaced nodes on [0, length].
Eigen::VectorXd simpson_weights(int nodes, double length);

}  // namespace resolab
