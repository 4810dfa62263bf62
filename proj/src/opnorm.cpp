#include "resolab/opnorm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace resolab {

double weighted_norm(const Eigen::VectorXcd& u, double p, double weight) {
  if (u.size() == 0) return 0.0;
  const Eigen::ArrayXd mag = u.cwiseAbs().array();
  const double peak = mag.maxCoeff();
  if (std::isinf(p)) return peak;
  if (peak == 0.0) return 0.0;
  if (p == 2.0) return std::sqrt(weight * u.squaredNorm());
  return peak * std::pow(weight * (mag / peak).pow(p).sum(), 1.0 / p);
}

Eigen::VectorXcd duality_map(const Eigen::VectorXcd& v, double r, double weight) {
  const double norm = weighted_norm(v, r, weight);
  if (!(norm > 0.0)) return Eigen::VectorXcd::Zero(v.size());
  // (|v|/|v|_r)^{r-1} sgn(v), computed on the normalized vector.
  Eigen::VectorXcd out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double m = std::abs(v[i]);
    out[i] = m == 0.0 ? Complex(0.0) : v[i] / m * std::pow(m / norm, r - 1.0);
  }
  return out;
}

namespace {

bool all_finite(const Eigen::VectorXcd& v) { return v.allFinite(); }

struct SeedRun {
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  Eigen::VectorXcd witness;
};

SeedRun run_seed(const VectorOperator& apply, const VectorOperator& adjoint, DiscreteSpace dom, DiscreteSpace cod,
                 double p, double q, Eigen::VectorXcd u, const PowerIterOptions& opt) {
  SeedRun run;
  const double pd = dual_exponent(p);
  double norm_u = weighted_norm(u, p, dom.weight);
  if (!(norm_u > 0.0)) return run;
  u /= norm_u;
  Eigen::VectorXcd tu = apply(u);
  if (!all_finite(tu)) throw NumericalError("opnorm_power_iter: non-finite operator output");
  double current = weighted_norm(tu, q, cod.weight);
  run.value = current;
  run.witness = u;
  int calm = 0;
  for (int it = 1; it <= opt.max_iters; ++it) {
    const Eigen::VectorXcd s = duality_map(tu, q, cod.weight);
    const Eigen::VectorXcd w = adjoint(s);
    if (!all_finite(w)) throw NumericalError("opnorm_power_iter: non-finite adjoint output");
    Eigen::VectorXcd next = duality_map(w, pd, dom.weight);
    norm_u = weighted_norm(next, p, dom.weight);
    if (!(norm_u > 0.0)) break;
    next /= norm_u;
    tu = apply(next);
    if (!all_finite(tu)) throw NumericalError("opnorm_power_iter: non-finite operator output");
    const double value = weighted_norm(tu, q, cod.weight);
    const double change = std::abs(value - current) / std::max(value, 1e-300);
    current = value;
    run.iterations = it;
    run.residual = change;
    if (value > run.value) {
      run.value = value;
      run.witness = next;
    }
    calm = change < opt.rel_tol ? calm + 1 : 0;
    if (calm >= opt.patience) {
      run.converged = true;
      break;
    }
  }
  return run;
}

Eigen::VectorXcd normal_start(Index size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXcd v(size);
  for (Index i = 0; i < size; ++i) v[i] = Complex(normal(rng), normal(rng));
  return v;
}

// Seeds are derived per index so adding seeds only appends runs.
std::uint64_t seed_for(std::uint64_t base, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t(out[0]) << 32) | out[1];
}

}  // namespace

NormEstimate opnorm_power_iter(const VectorOperator& apply, const VectorOperator& apply_adjoint, DiscreteSpace domain,
                               DiscreteSpace codomain, double p, double q, const PowerIterOptions& options) {
  if (!(p > 1.0 && p <= 2.0 && q >= 2.0 && std::isfinite(q)))
    throw DomainError("opnorm_power_iter: requires 1 < p <= 2 <= q < inf");
  NormEstimate best;
  auto consider = [&](const SeedRun& run) {
    ++best.seed_count;
    if (run.witness.size() == 0) return;
    if (run.value > best.lower_bound || best.witness.size() == 0) {
      best.lower_bound = run.value;
      best.iterations = run.iterations;
      best.residual = run.residual;
      best.converged = run.converged;
      best.witness = run.witness;
    }
  };
  for (const auto& guess : options.initial_guesses)
    consider(run_seed(apply, apply_adjoint, domain, codomain, p, q, guess, options));
  for (int s = 0; s < options.seeds; ++s) {
    const std::uint64_t seed = seed_for(options.seed, s);
    Eigen::VectorXcd start = options.random_start ? options.random_start(seed) : normal_start(domain.size, seed);
    consider(run_seed(apply, apply_adjoint, domain, codomain, p, q, std::move(start), options));
  }
  return best;
}

NormEstimate opnorm_power_iter(const FieldOperator& apply, const FieldOperator& apply_adjoint, const TorusGrid& domain,
                               const TorusGrid& codomain, double p, double q, const PowerIterOptions& options) {
  VectorOperator a = [&](const Eigen::VectorXcd& v) { return apply(GridField(domain, v)).values; };
  VectorOperator b = [&](const Eigen::VectorXcd& v) { return apply_adjoint(GridField(codomain, v)).values; };
  return opnorm_power_iter(a, b, {domain.points(), domain.cell_volume()}, {codomain.points(), codomain.cell_volume()},
                           p, q, options);
}

namespace {

double objective(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& s, double exponent, double q) {
  Eigen::VectorXcd v(s.size());
  for (Index i = 0; i < s.size(); ++i) v[i] = s[i] * std::pow(std::abs(s[i]), exponent);
  return weighted_norm(a * v, q, 1.0);
}

}  // namespace

double dense_opnorm_oracle(const Eigen::MatrixXcd& a, double p, double q, std::uint64_t seed, int starts) {
  if (a.rows() > 32 || a.cols() > 32) throw DomainError("dense_opnorm_oracle: dimensions must be <= 32");
  if (!(p >= 1.0 && q >= 1.0)) throw DomainError("dense_opnorm_oracle: exponents must be >= 1");
  if (p == 1.0) {
    double best = 0.0;
    for (Index j = 0; j < a.cols(); ++j) best = std::max(best, weighted_norm(a.col(j), q, 1.0));
    return best;
  }
  if (std::isinf(q)) {
    const double pd = dual_exponent(p);
    double best = 0.0;
    for (Index i = 0; i < a.rows(); ++i) best = std::max(best, weighted_norm(a.row(i).transpose(), pd, 1.0));
    return best;
  }
  const double expo = 2.0 / p - 1.0;
  double best = 0.0;
  for (int start = 0; start < starts; ++start) {
    Eigen::VectorXcd s = normal_start(a.cols(), seed_for(seed, start));
    s.normalize();
    double f = objective(a, s, expo, q);
    double step = 0.5;
    for (int it = 0; it < 4000 && step > 1e-14; ++it) {
      Eigen::VectorXcd v(s.size());
      for (Index i = 0; i < s.size(); ++i) v[i] = s[i] * std::pow(std::abs(s[i]), expo);
      const Eigen::VectorXcd av = a * v;
      Eigen::VectorXcd weighted(av.size());
      for (Index i = 0; i < av.size(); ++i) {
        const double m = std::abs(av[i]);
        weighted[i] = m == 0.0 ? Complex(0.0) : av[i] * std::pow(m, q - 2.0);
      }
      const Eigen::VectorXcd g = a.adjoint() * weighted;
      Eigen::VectorXcd grad(s.size());
      for (Index i = 0; i < s.size(); ++i) {
        const double m = std::abs(s[i]);
        if (m == 0.0) {
          grad[i] = expo == 0.0 ? g[i] : Complex(0.0);
          continue;
        }
        grad[i] = g[i] * std::pow(m, expo) + expo * std::pow(m, expo - 2.0) * std::real(std::conj(g[i]) * s[i]) * s[i];
      }
      // Project onto the tangent space of the sphere.
      grad -= std::real(s.dot(grad)) * s;
      const double gnorm = grad.norm();
      if (gnorm == 0.0) break;
      grad /= gnorm;
      bool moved = false;
      while (step > 1e-14) {
        Eigen::VectorXcd trial = (s + step * grad).normalized();
        const double ft = objective(a, trial, expo, q);
        if (ft > f) {
          const double gain = (ft - f) / ft;
          s = trial;
          f = ft;
          step *= 1.5;
          moved = true;
          if (gain < 1e-15) step = 0.0;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    best = std::max(best, f);
  }
  return best;
}

double duality_check(const VectorOperator& apply, const VectorOperator& apply_adjoint, DiscreteSpace domain,
                     DiscreteSpace codomain, double p, double q, const PowerIterOptions& options) {
  const NormEstimate forward = opnorm_power_iter(apply, apply_adjoint, domain, codomain, p, q, options);
  const NormEstimate backward =
      opnorm_power_iter(apply_adjoint, apply, codomain, domain, dual_exponent(q), dual_exponent(p), options);
  if (!(forward.lower_bound > 0.0)) return 0.0;
  return std::abs(forward.lower_bound - backward.lower_bound) / forward.lower_bound;
}

std::pair<VectorOperator, VectorOperator> kernel_operator(const Eigen::MatrixXcd& kernel, double domain_weight,
                                                          double codomain_weight) {
  VectorOperator forward = [kernel, domain_weight](const Eigen::VectorXcd& u) -> Eigen::VectorXcd {
    return domain_weight * (kernel * u);
  };
  VectorOperator adjoint = [kernel, codomain_weight](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    return codomain_weight * (kernel.adjoint() * v);
  };
  return {forward, adjoint};
}

}  // namespace resolab
