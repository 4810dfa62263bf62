#pragma once

// Oscillatory integral operators T_lambda u(x) = int e^{i lambda phi(x,y)} a(x,y) u(y) dy
// on axis-aligned boxes, and fits of their norm decay in lambda.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resolab/common.hpp"
#include "resolab/opnorm.hpp"
#include "resolab/torus.hpp"

namespace resolab {

struct Box {
  Eigen::VectorXd lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double diameter() const { return (hi - lo).norm(); }
  Box translated(const Eigen::VectorXd& shift) const { return {lo + shift, hi + shift}; }
};

Box cube_box(const Eigen::VectorXd& center, double side);

using OscPhase = std::function<double(std::span<const double>, std::span<const double>)>;
using OscAmplitude = std::function<Complex(std::span<const double>, std::span<const double>)>;

/// phi(x, y) = profile(x - y) and a(x, y) = x_factor(x) y_factor(y). With equal
/// box sides the sampled kernel is block Toeplitz and is applied by FFT.
struct ConvolutionForm {
  std::function<double(std::span<const double>)> profile;
  std::function<Complex(std::span<const double>)> x_factor, y_factor;
};

struct OscKernelSpec {
  int n = 2;
  OscPhase phase;
  /// Must vanish outside x_support x y_support.
  OscAmplitude amplitude;
  /// Optional factored description of the same kernel; must agree with phase and amplitude.
  std::optional<ConvolutionForm> convolution;
  Box x_support, y_support;
  /// Bound on |grad_y phase| over the supports; enters the resolution rule.
  double phase_gradient = 1.0;
  std::vector<double> lambdas;

  /// Throws DomainError on a malformed spec (ladder must be strictly increasing, >= 1).
  void validate() const;
};

/// |x - y|; mixed Hessian has corank one off the diagonal.
OscPhase distance_phase();
/// x . y; mixed Hessian is the identity.
OscPhase bilinear_phase();

/// Smooth cutoff on a box: 1 on the central `plateau` fraction of each axis,
/// exp-type transition to 0 at the faces. plateau = 0 gives exp(1 - 1/(1-t^2)).
std::function<Complex(std::span<const double>)> box_cutoff(const Box& box, double plateau = 0.0);
OscAmplitude bump_amplitude(const Box& x_support, const Box& y_support, double plateau = 0.0);

/// Distance phase on two side-`side` squares separated by `gap` along x_1, with
/// plateau cutoffs. Carries the convolution form.
OscKernelSpec distance_spec(std::vector<double> lambdas, double side = 0.5, double gap = 0.025, double plateau = 0.85);
/// Bilinear phase on [-1/2, 1/2]^n x [-1/2, 1/2]^n.
OscKernelSpec bilinear_spec(int n, std::vector<double> lambdas);

/// Thrown when the grid cannot resolve e^{i lambda phi}.
class ResolutionError : public DomainError {
 public:
  ResolutionError(const std::string& what, int required) : DomainError(what), required_(required) {}
  int required() const { return required_; }

 private:
  int required_;
};

/// Smallest per-axis point count with N >= 8 lambda diam / 2 pi, diam being the
/// larger box diameter scaled by the phase gradient bound.
int required_points(const OscKernelSpec& spec, double lambda);

/// Midpoint-rule discretization with weights prod h_a. Nodes are stored
/// column-wise, last axis fastest. Dense kernel table by default; the FFT route
/// is used when the spec carries a convolution form and both boxes have equal sides.
class OscOperator {
 public:
  double lambda() const { return lambda_; }
  int points_per_axis() const { return points_; }
  bool uses_fft() const { return fft_ != nullptr; }
  const Eigen::MatrixXd& x_nodes() const { return x_nodes_; }
  const Eigen::MatrixXd& y_nodes() const { return y_nodes_; }
  DiscreteSpace domain() const { return {y_nodes_.cols(), y_weight_}; }
  DiscreteSpace codomain() const { return {x_nodes_.cols(), x_weight_}; }

  /// K_ij = e^{i lambda phi(x_i, y_j)} a(x_i, y_j); materialized on demand for the FFT route.
  Eigen::MatrixXcd kernel() const;

  /// (T u)_i = sum_j K_ij u_j w_y
  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const;
  /// Adjoint in the weighted inner products: w_x K^* v.
  Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& v) const;
  VectorOperator forward_operator() const;
  VectorOperator adjoint_operator() const;

  /// Exact L^1 -> L^inf norm of the discretization: max |K_ij|.
  double l1_to_linf_norm() const;

  struct Toeplitz;
  friend OscOperator build_osc_operator(const OscKernelSpec&, double, int, bool);

 private:
  double lambda_ = 0.0;
  int points_ = 0;
  Eigen::MatrixXd x_nodes_, y_nodes_;
  double x_weight_ = 0.0, y_weight_ = 0.0;
  std::shared_ptr<const Eigen::MatrixXcd> dense_;
  std::shared_ptr<const Toeplitz> fft_;
};

Eigen::MatrixXd box_nodes(const Box& box, int points_per_axis);

/// Throws ResolutionError when points_per_axis < required_points(spec, lambda).
/// lambda = 0 is accepted here (the ladder constraint lives in validate()).
/// use_fft = false forces the dense table even when a convolution form is present.
OscOperator build_osc_operator(const OscKernelSpec& spec, double lambda, int points_per_axis, bool use_fft = true);

enum class DecayRegime {
  l2_corank_one,     // p = q = 2: -(n-1)/2
  dual_interpolated,  // q = p': -(n-1)/p'
  carleson_sjolin,   // q = (n+1)p'/(n-1): -n/q
};

/// Classifies (p, q) and returns the predicted slope of log norm vs log lambda.
/// Throws DomainError for pairs outside the three families.
std::pair<DecayRegime, double> theoretical_decay(int n, double p, double q);

struct DecayOptions {
  /// 0 gives each ladder point required_points(spec, lambda), i.e. a fixed
  /// number of samples per wavelength; otherwise one count for the whole ladder.
  int points_per_axis = 0;
  int workers = 1;
  PowerIterOptions power;
  /// Relative slack before a norm increase counts as non-monotone.
  double monotone_slack = 1e-3;
};

struct DecayPoint {
  double lambda;
  double norm_lb;
  int iterations;
  bool converged;
};

struct DecayFit {
  DecayRegime regime;
  double theoretical_slope;
  std::vector<DecayPoint> points;
  bool valid = false;        // false when some norm is 0 (no log fit possible)
  double slope = 0.0;
  double half_width = 0.0;   // 2 standard errors of the slope
  double intercept = 0.0;
  bool monotone = true;      // false flags an increase beyond monotone_slack
};

/// True when no norm exceeds its predecessor by more than the relative slack.
bool nonincreasing(const std::vector<DecayPoint>& points, double slack);

DecayFit decay_fit(const OscKernelSpec& spec, double p, double q, const DecayOptions& options = {});

}  // namespace resolab
