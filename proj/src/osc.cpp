#include "resolab/osc.hpp"

#include <cmath>
#include <sstream>

#include "resolab/parallel.hpp"

namespace resolab {

Box cube_box(const Eigen::VectorXd& center, double side) {
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(center.size(), side / 2);
  return {center - half, center + half};
}

void OscKernelSpec::validate() const {
  if (n < 1) throw DomainError("osc: dimension must be >= 1");
  if (!phase || !amplitude) throw DomainError("osc: phase and amplitude are required");
  for (const Box* b : {&x_support, &y_support}) {
    if (b->dim() != n || b->hi.size() != n) throw DomainError("osc: support box dimension mismatch");
    if (!(b->lo.array() < b->hi.array()).all() || !b->lo.allFinite() || !b->hi.allFinite())
      throw DomainError("osc: support box must be bounded and non-degenerate");
  }
  if (!(phase_gradient > 0.0) || !std::isfinite(phase_gradient)) throw DomainError("osc: phase_gradient must be positive");
  for (size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 1.0) || !std::isfinite(lambdas[i])) throw DomainError("osc: ladder values must be >= 1");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw DomainError("osc: ladder must be strictly increasing");
  }
}

OscPhase distance_phase() {
  return [](std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (size_t a = 0; a < x.size(); ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
    return std::sqrt(s);
  };
}

OscPhase bilinear_phase() {
  return [](std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (size_t a = 0; a < x.size(); ++a) s += x[a] * y[a];
    return s;
  };
}

namespace {

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double cutoff_1d(double t, double plateau) {
  t = std::abs(t);
  if (t >= 1.0) return 0.0;
  if (plateau <= 0.0) return std::exp(1.0 - 1.0 / (1.0 - t * t));
  return t <= plateau ? 1.0 : 1.0 - smooth_step((t - plateau) / (1.0 - plateau));
}

}  // namespace

std::function<Complex(std::span<const double>)> box_cutoff(const Box& box, double plateau) {
  if (!(plateau >= 0.0 && plateau < 1.0)) throw DomainError("osc: plateau must lie in [0, 1)");
  return [box, plateau](std::span<const double> x) -> Complex {
    double v = 1.0;
    for (int a = 0; a < box.dim() && v != 0.0; ++a) {
      const double c = 0.5 * (box.lo[a] + box.hi[a]), r = 0.5 * (box.hi[a] - box.lo[a]);
      v *= cutoff_1d((x[a] - c) / r, plateau);
    }
    return v;
  };
}

OscAmplitude bump_amplitude(const Box& x_support, const Box& y_support, double plateau) {
  return [bx = box_cutoff(x_support, plateau), by = box_cutoff(y_support, plateau)](std::span<const double> x,
                                                                                   std::span<const double> y) {
    return bx(x) * by(y);
  };
}

OscKernelSpec distance_spec(std::vector<double> lambdas, double side, double gap, double plateau) {
  if (!(side > 0.0 && gap > 0.0)) throw DomainError("osc: side and gap must be positive");
  OscKernelSpec s;
  s.n = 2;
  s.phase = distance_phase();
  s.x_support = cube_box(Eigen::Vector2d(0.0, 0.0), side);
  s.y_support = cube_box(Eigen::Vector2d(side + gap, 0.0), side);
  s.amplitude = bump_amplitude(s.x_support, s.y_support, plateau);
  s.convolution = ConvolutionForm{
      [](std::span<const double> d) { return std::hypot(d[0], d[1]); },
      box_cutoff(s.x_support, plateau),
      box_cutoff(s.y_support, plateau),
  };
  s.phase_gradient = 1.0;
  s.lambdas = std::move(lambdas);
  return s;
}

OscKernelSpec bilinear_spec(int n, std::vector<double> lambdas) {
  OscKernelSpec s;
  s.n = n;
  s.phase = bilinear_phase();
  s.x_support = cube_box(Eigen::VectorXd::Zero(n), 1.0);
  s.y_support = s.x_support;
  s.amplitude = bump_amplitude(s.x_support, s.y_support);
  // |grad_y (x.y)| = |x| <= half the cube diagonal
  s.phase_gradient = 0.5 * std::sqrt(static_cast<double>(n));
  s.lambdas = std::move(lambdas);
  return s;
}

int required_points(const OscKernelSpec& spec, double lambda) {
  const double diam = std::max(spec.x_support.diameter(), spec.y_support.diameter()) * spec.phase_gradient;
  return std::max(1, static_cast<int>(std::ceil(8.0 * lambda * diam / (2.0 * kPi) - 1e-12)));
}

Eigen::MatrixXd box_nodes(const Box& box, int points_per_axis) {
  const int n = box.dim();
  Index count = 1;
  for (int a = 0; a < n; ++a) count *= points_per_axis;
  Eigen::MatrixXd nodes(n, count);
  for (Index c = 0; c < count; ++c) {
    Index rest = c;
    for (int a = n - 1; a >= 0; --a) {
      const int i = static_cast<int>(rest % points_per_axis);
      rest /= points_per_axis;
      const double h = (box.hi[a] - box.lo[a]) / points_per_axis;
      nodes(a, c) = box.lo[a] + (i + 0.5) * h;
    }
  }
  return nodes;
}

struct OscOperator::Toeplitz {
  TorusGrid grid;                    // M^n with M >= 2N, holds the cyclic embedding
  std::vector<Index> slots;          // node -> grid index
  Eigen::VectorXcd forward_symbol;   // sqrt(M) FFT of k(m)
  Eigen::VectorXcd adjoint_symbol;   // same for conj(k(-m))
  Eigen::VectorXcd x_factor, y_factor;

  Eigen::VectorXcd convolve(const Eigen::VectorXcd& symbol, const Eigen::VectorXcd& w) const {
    GridField f(grid);
    for (size_t c = 0; c < slots.size(); ++c) f.values[slots[c]] = w[c];
    Spectrum s = fourier_forward(f);
    s.coeffs.array() *= symbol.array();
    const GridField g = fourier_inverse(s);
    Eigen::VectorXcd out(slots.size());
    for (size_t c = 0; c < slots.size(); ++c) out[c] = g.values[slots[c]];
    return out;
  }
};

namespace {

bool equal_sides(const Box& a, const Box& b) {
  const Eigen::ArrayXd sa = a.hi - a.lo, sb = b.hi - b.lo;
  return ((sa - sb).abs() <= 1e-14 * sa.abs().max(sb.abs())).all();
}

Eigen::VectorXcd sample_factor(const std::function<Complex(std::span<const double>)>& f, const Eigen::MatrixXd& nodes) {
  Eigen::VectorXcd out(nodes.cols());
  for (Index c = 0; c < nodes.cols(); ++c) out[c] = f(std::span<const double>(nodes.col(c).data(), nodes.rows()));
  return out;
}

}  // namespace

OscOperator build_osc_operator(const OscKernelSpec& spec, double lambda, int points_per_axis, bool use_fft) {
  if (!spec.phase || !spec.amplitude) throw DomainError("osc: phase and amplitude are required");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("osc: lambda must be finite and >= 0");
  const int need = required_points(spec, lambda);
  if (points_per_axis < need) {
    std::ostringstream msg;
    msg << "osc: " << points_per_axis << " points per axis under-resolve lambda = " << lambda << "; need N >= " << need;
    throw ResolutionError(msg.str(), need);
  }
  const int n = spec.n;
  OscOperator op;
  op.lambda_ = lambda;
  op.points_ = points_per_axis;
  op.x_nodes_ = box_nodes(spec.x_support, points_per_axis);
  op.y_nodes_ = box_nodes(spec.y_support, points_per_axis);
  op.x_weight_ = (spec.x_support.hi - spec.x_support.lo).prod() / static_cast<double>(op.x_nodes_.cols());
  op.y_weight_ = (spec.y_support.hi - spec.y_support.lo).prod() / static_cast<double>(op.y_nodes_.cols());

  if (use_fft && spec.convolution && equal_sides(spec.x_support, spec.y_support) && points_per_axis >= 4) {
    const ConvolutionForm& form = *spec.convolution;
    auto t = std::make_shared<OscOperator::Toeplitz>();
    int m2 = 8;  // power of two >= 2N keeps the FFT on its fast path
    while (m2 < 2 * points_per_axis) m2 *= 2;
    t->grid = TorusGrid::cube(n, m2);
    t->slots.resize(op.x_nodes_.cols());
    std::vector<int> idx(n);
    for (Index c = 0; c < op.x_nodes_.cols(); ++c) {
      Index rest = c;
      for (int a = n - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(rest % points_per_axis);
        rest /= points_per_axis;
      }
      t->slots[c] = t->grid.ravel(idx);
    }
    const Eigen::VectorXd offset = op.x_nodes_.col(0) - op.y_nodes_.col(0);
    const Eigen::ArrayXd h = (spec.x_support.hi - spec.x_support.lo).array() / points_per_axis;
    GridField kf(t->grid), ka(t->grid);
    std::vector<double> d(n);
    for (Index g = 0; g < t->grid.points(); ++g) {
      t->grid.unravel(g, idx);
      bool unused = false;
      for (int a = 0; a < n; ++a) {
        const int m = t->grid.frequency(a, idx[a]);  // signed lag
        unused = unused || std::abs(m) >= points_per_axis;
        d[a] = offset[a] + m * h[a];
      }
      if (unused) continue;
      kf.values[g] = std::polar(1.0, lambda * form.profile(d));
    }
    // conj(k(-m)) sits at slot -m
    for (Index g = 0; g < t->grid.points(); ++g) {
      t->grid.unravel(g, idx);
      for (int a = 0; a < n; ++a) idx[a] = (m2 - idx[a]) % m2;
      ka.values[t->grid.ravel(idx)] = std::conj(kf.values[g]);
    }
    const double scale = std::sqrt(static_cast<double>(t->grid.points()));
    t->forward_symbol = scale * fourier_forward(kf).coeffs;
    t->adjoint_symbol = scale * fourier_forward(ka).coeffs;
    t->x_factor = sample_factor(form.x_factor, op.x_nodes_);
    t->y_factor = sample_factor(form.y_factor, op.y_nodes_);
    if (!t->forward_symbol.allFinite() || !t->x_factor.allFinite() || !t->y_factor.allFinite())
      throw NumericalError("osc: non-finite kernel sample");
    op.fft_ = std::move(t);
    return op;
  }

  const Index rows = op.x_nodes_.cols(), cols = op.y_nodes_.cols();
  auto kernel = std::make_shared<Eigen::MatrixXcd>(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    std::span<const double> y(op.y_nodes_.col(j).data(), n);
    for (Index i = 0; i < rows; ++i) {
      std::span<const double> x(op.x_nodes_.col(i).data(), n);
      const Complex a = spec.amplitude(x, y);
      (*kernel)(i, j) = a == Complex(0.0) ? Complex(0.0) : a * std::polar(1.0, lambda * spec.phase(x, y));
    }
  }
  if (!kernel->allFinite()) throw NumericalError("osc: non-finite kernel sample");
  op.dense_ = std::move(kernel);
  return op;
}

Eigen::MatrixXcd OscOperator::kernel() const {
  if (dense_) return *dense_;
  // Column j is T e_j / w_y.
  Eigen::MatrixXcd k(x_nodes_.cols(), y_nodes_.cols());
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(y_nodes_.cols());
  for (Index j = 0; j < k.cols(); ++j) {
    e[j] = 1.0;
    k.col(j) = apply(e) / y_weight_;
    e[j] = 0.0;
  }
  return k;
}

Eigen::VectorXcd OscOperator::apply(const Eigen::VectorXcd& u) const {
  if (u.size() != y_nodes_.cols()) throw DomainError("osc: input size mismatch");
  if (fft_) return y_weight_ * fft_->x_factor.cwiseProduct(fft_->convolve(fft_->forward_symbol, fft_->y_factor.cwiseProduct(u)));
  return y_weight_ * (*dense_ * u);
}

Eigen::VectorXcd OscOperator::apply_adjoint(const Eigen::VectorXcd& v) const {
  if (v.size() != x_nodes_.cols()) throw DomainError("osc: input size mismatch");
  if (fft_)
    return x_weight_ *
           fft_->y_factor.conjugate().cwiseProduct(fft_->convolve(fft_->adjoint_symbol, fft_->x_factor.conjugate().cwiseProduct(v)));
  return x_weight_ * (dense_->adjoint() * v);
}

VectorOperator OscOperator::forward_operator() const {
  return [self = *this](const Eigen::VectorXcd& u) { return self.apply(u); };
}

VectorOperator OscOperator::adjoint_operator() const {
  return [self = *this](const Eigen::VectorXcd& v) { return self.apply_adjoint(v); };
}

double OscOperator::l1_to_linf_norm() const {
  if (fft_) return fft_->x_factor.cwiseAbs().maxCoeff() * fft_->y_factor.cwiseAbs().maxCoeff();
  return dense_->cwiseAbs().maxCoeff();
}

std::pair<DecayRegime, double> theoretical_decay(int n, double p, double q) {
  if (n < 2) throw DomainError("osc: decay regimes need n >= 2");
  if (!(p > 1.0 && p <= 2.0 && q >= 2.0 && std::isfinite(q))) throw DomainError("osc: need 1 < p <= 2 <= q < inf");
  const double pd = dual_exponent(p);
  const double tol = 1e-12 * q;
  if (p == 2.0 && q == 2.0) return {DecayRegime::l2_corank_one, -(n - 1) / 2.0};
  if (std::abs(q - pd) <= tol) return {DecayRegime::dual_interpolated, -(n - 1) / pd};
  if (std::abs(q - (n + 1) * pd / (n - 1)) <= tol) return {DecayRegime::carleson_sjolin, -n / q};
  std::ostringstream msg;
  msg << "osc: (p, q) = (" << p << ", " << q << ") is neither q = p' nor q = (n+1)p'/(n-1)";
  throw DomainError(msg.str());
}

bool nonincreasing(const std::vector<DecayPoint>& points, double slack) {
  for (size_t k = 1; k < points.size(); ++k)
    if (points[k].norm_lb > points[k - 1].norm_lb * (1.0 + slack)) return false;
  return true;
}

DecayFit decay_fit(const OscKernelSpec& spec, double p, double q, const DecayOptions& options) {
  spec.validate();
  if (spec.lambdas.size() < 4) throw DomainError("osc: decay fit needs at least 4 ladder points");
  DecayFit fit;
  std::tie(fit.regime, fit.theoretical_slope) = theoretical_decay(spec.n, p, q);

  const size_t m = spec.lambdas.size();
  fit.points.resize(m);
  parallel_for(static_cast<long>(m), options.workers, [&](long k) {
    const double lambda = spec.lambdas[k];
    const int points = options.points_per_axis > 0 ? options.points_per_axis : required_points(spec, lambda);
    const OscOperator op = build_osc_operator(spec, lambda, points);
    const NormEstimate est = opnorm_power_iter(op.forward_operator(), op.adjoint_operator(), op.domain(),
                                               op.codomain(), p, q, options.power);
    fit.points[k] = {spec.lambdas[k], est.lower_bound, est.iterations, est.converged};
  });

  fit.monotone = nonincreasing(fit.points, options.monotone_slack);

  for (const auto& pt : fit.points)
    if (!(pt.norm_lb > 0.0)) return fit;

  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd rhs(m);
  for (size_t k = 0; k < m; ++k) {
    design(k, 0) = 1.0;
    design(k, 1) = std::log(fit.points[k].lambda);
    rhs[k] = std::log(fit.points[k].norm_lb);
  }
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(rhs);
  const Eigen::VectorXd resid = rhs - design * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(m - 2);
  const double sxx = (design.col(1).array() - design.col(1).mean()).square().sum();
  fit.valid = true;
  fit.intercept = beta[0];
  fit.slope = beta[1];
  fit.half_width = 2.0 * std::sqrt(sigma2 / sxx);
  return fit;
}

}  // namespace resolab
