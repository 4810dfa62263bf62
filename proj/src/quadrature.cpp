#include "resolab/quadrature.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace resolab {

namespace {

// Abscissae beyond this in the tanh-sinh variable carry weights below 1e-300.
constexpr double kTMax = 3.2;

struct Node {
  double x_left_offset;  // distance from the left endpoint, in units of (b - a)/2
  double x_right_offset;
  double weight;
};

Node node_at(double t) {
  const double s = 0.5 * kPi * std::sinh(t);
  const double c = std::cosh(s);
  // 1 - tanh(s) and 1 + tanh(s) without cancellation.
  const double e = std::exp(-2.0 * std::abs(s));
  const double small = 2.0 * e / (1.0 + e);
  const double big = 2.0 / (1.0 + e);
  const double w = 0.5 * kPi * std::cosh(t) / (c * c);
  if (s >= 0) return {big, small, w};
  return {small, big, w};
}

}  // namespace

QuadratureResult tanh_sinh(const std::function<Complex(double)>& f, double a, double b,
                           double rel_tol, int max_level, double abs_floor) {
  const double half = 0.5 * (b - a);
  auto eval = [&](double t) {
    const Node nd = node_at(t);
    if (nd.x_left_offset == 0.0 || nd.x_right_offset == 0.0) return Complex(0.0);
    const double x = nd.x_left_offset <= nd.x_right_offset ? a + half * nd.x_left_offset
                                                           : b - half * nd.x_right_offset;
    return f(x) * nd.weight;
  };

  double h = 0.5;
  Complex sum = eval(0.0);
  for (double t = h; t <= kTMax; t += h) sum += eval(t) + eval(-t);
  Complex estimate = sum * h * half;

  QuadratureResult res{estimate, std::abs(estimate), 0, false};
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    Complex fresh = 0.0;
    for (double t = h; t <= kTMax; t += 2.0 * h) fresh += eval(t) + eval(-t);
    sum += fresh;
    const Complex next = sum * h * half;
    const double diff = std::abs(next - estimate);
    estimate = next;
    res = {estimate, diff, level, false};
    if (!std::isfinite(diff)) throw NumericalError("tanh_sinh: non-finite integrand");
    if (level >= 2 && (diff <= rel_tol * std::abs(estimate) || diff <= abs_floor)) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

GaussRule gauss_legendre(int order) {
  if (order < 1) throw DomainError("gauss_legendre: order must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

Eigen::VectorXd simpson_weights(int nodes, double length) {
  if (nodes < 3 || nodes % 2 == 0) throw DomainError("simpson_weights: need an odd count >= 3");
  const double h = length / (nodes - 1);
  Eigen::VectorXd w(nodes);
  for (int i = 0; i < nodes; ++i) w(i) = (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  return w * (h / 3.0);
}

}  // namespace resolab
