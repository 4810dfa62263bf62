#pragma once

// Riemannian metrics on a coordinate box: Christoffel symbols, geodesics with
// their variational equations, the exponential map and its inverse.

#include <array>
#include <functional>
#include <vector>

#include "resolab/common.hpp"

namespace resolab {

inline constexpr int kMaxChartDim = 4;

using ChartVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxChartDim, 1>;
using ChartMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxChartDim, kMaxChartDim>;
/// derivs[k] = d g / d x^k
using MetricDerivatives = std::array<ChartMatrix, kMaxChartDim>;
/// gamma[l](j, k) = Gamma^l_{jk}
using Christoffel = std::array<ChartMatrix, kMaxChartDim>;

struct MetricChart {
  int n = 0;
  ChartVector lo;
  ChartVector hi;
  std::function<ChartMatrix(const ChartVector&)> g;
  /// Optional; central differences with step fd_step otherwise.
  std::function<MetricDerivatives(const ChartVector&)> dg;
  double fd_step = 1e-5;
  /// Optional closed forms. gamma replaces the derivative route in
  /// christoffel(); spray_jacobian(x, v) = d_x [Gamma(x)(v, v)] replaces
  /// central differences in the variational equations.
  std::function<Christoffel(const ChartVector&)> gamma;
  std::function<ChartMatrix(const ChartVector&, const ChartVector&)> spray_jacobian;

  bool contains(const ChartVector& x, double slack = 0.0) const;
  ChartMatrix metric(const ChartVector& x) const { return g(x); }
  MetricDerivatives derivatives(const ChartVector& x) const;
  Christoffel christoffel(const ChartVector& x) const;
  /// |v|_g(x)
  double norm(const ChartVector& x, const ChartVector& v) const;
  double diameter() const { return (hi - lo).norm(); }

  /// Smallest eigenvalue of g over a per_axis^n probe grid of the box.
  double probe_min_eigenvalue(int per_axis = 9) const;
  /// Throws DomainError unless g is symmetric positive definite on the probe grid.
  void validate(int per_axis = 9) const;
};

/// g = I on [-half_width, half_width]^n.
MetricChart flat_chart(int n, double half_width);
/// Round sphere in stereographic coordinates: g = 4 (1 + |x|^2)^{-2} I.
MetricChart sphere_chart(int n, double half_width);
/// Great-circle distance between stereographic points.
double sphere_distance(const ChartVector& x, const ChartVector& y);

struct GeodesicOptions {
  int min_steps = 64;
  /// Upper bound on the g-length of one step.
  double max_step_length = 0.02;
  /// Positions recorded at t = i / (samples - 1); 0 disables.
  int samples = 0;
  bool variational = false;
};

struct GeodesicPath {
  ChartVector end;
  ChartVector end_velocity;  // d/dt at t = 1, g-length |xi|
  ChartMatrix dexp;          // d end / d xi, when variational
  std::vector<ChartVector> samples;
  double speed_drift = 0.0;  // max relative change of |gamma'|_g at the sample points
  int steps = 0;
};

/// gamma(t) = exp_y(t xi), t in [0, 1], by classical RK4. Throws
/// DomainExitError if a stage leaves the chart box.
GeodesicPath integrate_geodesic(const MetricChart& chart, const ChartVector& y, const ChartVector& xi,
                                const GeodesicOptions& options = {});

/// exp_y(r theta) for |theta|_g(y) = 1.
ChartVector exp_map(const MetricChart& chart, const ChartVector& y, const ChartVector& theta, double r);

struct ShootingResult {
  ChartVector xi;  // exp_y(xi) = x
  double distance;
  GeodesicPath path;
  int iterations;
};

/// Newton shooting on the initial velocity; starts from `guess` or x - y.
/// Throws ConvergenceError after 50 iterations.
ShootingResult log_map(const MetricChart& chart, const ChartVector& y, const ChartVector& x,
                       const ChartVector* guess = nullptr, const GeodesicOptions& options = {},
                       double position_tol = 1e-11);

double geodesic_distance(const MetricChart& chart, const ChartVector& x, const ChartVector& y);

/// sqrt(det g(exp_y xi)) |det D exp_y(xi)| / sqrt(det g(y)); equals 1 at r = 0.
double volume_jacobian(const MetricChart& chart, const ChartVector& y, const ChartVector& theta, double r);

/// Unit vector for g(y) in the direction of v.
ChartVector unit_direction(const MetricChart& chart, const ChartVector& y, const ChartVector& v);

struct GeodesicPolarData {
  ChartVector center;
  std::vector<double> radii;
  std::vector<ChartVector> directions;           // g(center)-unit
  std::vector<std::vector<ChartVector>> points;  // [direction][radius]
  Eigen::MatrixXd jacobian;                      // directions x radii
  double injectivity_estimate;                   // first radius where J <= 0 or the ray exits, else last radius
};

GeodesicPolarData polar_data(const MetricChart& chart, const ChartVector& y, const std::vector<double>& radii,
                             const std::vector<ChartVector>& directions);

}  // namespace resolab
