#include "resolab/cutoff.hpp"

#include <cmath>

#include "resolab/common.hpp"

namespace resolab {

namespace {

// f(t) = exp(-1/t) and its first two derivatives, zero for t <= 0.
struct Mollifier {
  double f, f1, f2;
};

Mollifier mollifier(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  const double f = std::exp(-1.0 / t);
  const double t2 = t * t;
  return {f, f / t2, f * (1.0 / (t2 * t2) - 2.0 / (t2 * t))};
}

}  // namespace

StepValue smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const Mollifier a = mollifier(t);
  const Mollifier b0 = mollifier(1.0 - t);
  // B(t) = f(1 - t): B' = -f'(1 - t), B'' = f''(1 - t).
  const double b = b0.f, b1 = -b0.f1, b2 = b0.f2;
  const double s = a.f + b;
  const double s1 = a.f1 + b1;
  const double n = a.f1 * b - a.f * b1;
  const double n1 = a.f2 * b - a.f * b2;
  return {a.f / s, n / (s * s), n1 / (s * s) - 2.0 * n * s1 / (s * s * s)};
}

double psi0(double r) { return smooth_step(2.0 * (1.0 - std::abs(r))).value; }

double psi0_d1(double r) {
  const double sign = r < 0.0 ? -1.0 : 1.0;
  return -2.0 * sign * smooth_step(2.0 * (1.0 - std::abs(r))).d1;
}

double psi0_d2(double r) { return 4.0 * smooth_step(2.0 * (1.0 - std::abs(r))).d2; }

double psi(double r) { return psi0(0.5 * r) - psi0(r); }

double dyadic_cutoff(int nu, double r) {
  if (nu < 0) throw DomainError("dyadic_cutoff: nu must be >= 0");
  if (nu == 0) return psi0(0.5 * r);
  return psi(std::ldexp(r, -nu));
}

double CirclePartition::c0(double t) const {
  // Angular distance from pi, in [0, pi].
  const double d = std::abs(std::remainder(t - kPi, 2.0 * kPi));
  const double s = smooth_step((d - half_width) / (kPi - 2.0 * half_width)).value;
  return std::sin(0.5 * kPi * s);
}

double CirclePartition::c1(double t) const {
  const double d = std::abs(std::remainder(t - kPi, 2.0 * kPi));
  const double s = smooth_step((d - half_width) / (kPi - 2.0 * half_width)).value;
  return std::sin(0.5 * kPi * (1.0 - s));
}

}  // namespace resolab
