#include <doctest.h>

#include <cmath>

#include "resolab/region.hpp"
#include "resolab/torus.hpp"
#include "test_support.hpp"

using namespace resolab;

namespace {

GridField plane_wave(const TorusGrid& g, std::vector<int> k) {
  return sample(g, [k](std::span<const double> x) {
    double phase = 0.0;
    for (size_t a = 0; a < k.size(); ++a) phase += k[a] * x[a];
    return std::polar(1.0, phase);
  });
}

double rel(const GridField& a, const GridField& b) { return (a.values - b.values).norm() / b.values.norm(); }

}  // namespace

TEST_CASE("grid geometry") {
  const TorusGrid g({8, 10, 12});
  CHECK(g.points() == 960);
  CHECK(g.spacing(1) == doctest::Approx(2.0 * kPi / 10));
  std::vector<int> idx(3);
  g.unravel(g.ravel(std::vector<int>{3, 7, 11}), idx);
  CHECK(idx == std::vector<int>{3, 7, 11});
  CHECK(g.frequency(0, 4) == -4);
  CHECK(g.frequency(0, 3) == 3);
  CHECK(g.is_nyquist(0, -4));
  CHECK_THROWS_AS(TorusGrid({7, 8}), DomainError);
  CHECK_THROWS_AS(TorusGrid({6, 8}), DomainError);
}

TEST_CASE("forward transform of simple fields") {
  const TorusGrid g = TorusGrid::cube(3, 8);
  GridField one(g);
  one.values.setOnes();
  const Spectrum s = fourier_forward(one);
  CHECK(std::abs(s.coeffs[0] - std::pow(8.0, 1.5)) < 1e-12);
  CHECK(s.coeffs.tail(g.points() - 1).norm() < 1e-12);

  const Spectrum w = fourier_forward(plane_wave(g, {1, -2, 3}));
  const Index at = g.ravel(std::vector<int>{g.slot(0, 1), g.slot(1, -2), g.slot(2, 3)});
  CHECK(std::abs(w.coeffs[at] - std::pow(8.0, 1.5)) < 1e-11);
  CHECK(std::sqrt(w.coeffs.squaredNorm() - std::norm(w.coeffs[at])) < 1e-11);
}

TEST_CASE("Parseval and round trip") {
  for (const TorusGrid& g : {TorusGrid::cube(3, 16), TorusGrid({64, 8, 12}), TorusGrid::cube(2, 48)}) {
    testsupport::Gen gen(31);
    GridField u(g);
    for (Index i = 0; i < g.points(); ++i) u.values[i] = gen.complex_normal();
    const Spectrum s = fourier_forward(u);
    CHECK(std::abs(s.coeffs.squaredNorm() - u.values.squaredNorm()) <= 1e-13 * u.values.squaredNorm());
    CHECK(rel(fourier_inverse(s), u) <= 1e-13);
  }
}

TEST_CASE("helmholtz_apply examples") {
  const TorusGrid g = TorusGrid::cube(3, 16);
  const GridField e = plane_wave(g, {1, 0, 0});
  CHECK(rel(helmholtz_apply(e, 2.0), GridField(g, 3.0 * e.values)) < 1e-13);
  GridField c(g);
  c.values.setConstant(1.0);
  CHECK(rel(helmholtz_apply(c, 5.0), GridField(g, 5.0 * c.values)) < 1e-13);
}

TEST_CASE("spectral Laplacian agrees with finite differences to second order") {
  auto fd_error = [](int N) {
    const TorusGrid g = TorusGrid::cube(2, N);
    auto f = [](std::span<const double> x) { return Complex(std::exp(std::sin(x[0]) + 0.5 * std::cos(2.0 * x[1]))); };
    const GridField u = sample(g, f);
    const Complex z(0.7, 0.2);
    GridField lap = helmholtz_apply(u, z);
    lap.values -= z * u.values;  // -Delta u
    double err = 0.0;
    const double h = g.spacing(0);
    std::vector<int> idx(2);
    for (Index i = 0; i < g.points(); ++i) {
      g.unravel(i, idx);
      Complex fd = 0.0;
      for (int a = 0; a < 2; ++a) {
        std::vector<int> p = idx, m = idx;
        p[a] = (p[a] + 1) % N;
        m[a] = (m[a] + N - 1) % N;
        fd += (u.values[g.ravel(p)] - 2.0 * u.values[i] + u.values[g.ravel(m)]) / (h * h);
      }
      err = std::max(err, std::abs(-fd - lap.values[i]));
    }
    return err;
  };
  const double e32 = fd_error(32), e64 = fd_error(64);
  CHECK(e64 < 0.3 * e32);
  CHECK(e32 / e64 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("resolvent examples and round trips") {
  const TorusGrid g = TorusGrid::cube(3, 16);
  const GridField f = plane_wave(g, {2, 1, 0});
  const Complex z(1.0, 1.0);
  CHECK(rel(resolvent_apply(f, z), GridField(g, f.values / Complex(6.0, 1.0))) < 1e-13);

  testsupport::Gen gen(32);
  for (int i = 0; i < 20; ++i) {
    const GridField u = random_field(g, 100 + i, 8);
    const Complex zi = gen.z_off_negative_axis();
    CHECK(rel(helmholtz_apply(resolvent_apply(u, zi), zi), u) < 1e-12);
    CHECK(rel(resolvent_apply(helmholtz_apply(u, zi), zi), u) < 1e-12);
  }
  CHECK_THROWS_AS(resolvent_apply(f, Complex(-5.0, 0.0)), SingularError);
  CHECK_THROWS_AS(resolvent_multiplier(g, Complex(-2.0, 1e-14)), SingularError);
}

TEST_CASE("L2 resolvent norm is the reciprocal lattice distance") {
  const TorusGrid g = TorusGrid::cube(3, 16);
  const Complex z(-7.3, 0.4);
  const LatticeMin m = resolvent_lattice_min(g, z);
  const double sq = double(m.k[0]) * m.k[0] + double(m.k[1]) * m.k[1] + double(m.k[2]) * m.k[2];
  // 7 is not a sum of three squares, so the nearest shell is |k|^2 = 8.
  CHECK(sq == 8.0);
  CHECK(m.value == doctest::Approx(std::abs(8.0 + z)));
  CHECK(resolvent_l2_norm(g, z) == doctest::Approx(1.0 / std::abs(8.0 + z)));
}

TEST_CASE("L2 resolvent bound at z = -tau^2 + i tau") {
  const TorusGrid g = TorusGrid::cube(3, 32);
  const double tau = 8.0;
  const Complex z(-tau * tau, tau);
  const double lhs = resolvent_l2_norm(g, z);
  const double rhs = 1.0 / (std::sqrt(std::abs(z)) * sqrt_principal(z).real());
  CHECK(lhs <= rhs);
}

TEST_CASE("improved L2 bound over the region and its failure outside") {
  const TorusGrid g = TorusGrid::cube(3, 48);
  const double delta = 0.5;
  testsupport::Gen gen(33);
  int sampled = 0;
  double worst = 0.0;
  while (sampled < 200) {
    const Complex z = std::polar(gen.uniform(1.0, 400.0), gen.uniform(-kPi, kPi));
    if (!in_xi_delta(z, delta)) continue;
    ++sampled;
    worst = std::max(worst, resolvent_l2_norm(g, z) * std::sqrt(std::abs(z)));
  }
  CHECK(worst <= (1.0 / delta) * (1.0 + 1e-12));
  for (double lambda : {100.0, 196.0, 289.0}) {
    const Complex z(-lambda, 0.01);
    CHECK_FALSE(in_xi_delta(z, delta));
    CHECK(resolvent_l2_norm(g, z) * std::sqrt(std::abs(z)) >= 10.0 / delta);
  }
}

TEST_CASE("cluster projectors") {
  const TorusGrid g = TorusGrid::cube(3, 16);
  const GridField u = random_field(g, 7, 8);
  for (int m = 0; m <= 6; ++m) {
    const GridField c = cluster_project(u, m);
    CHECK((cluster_project(c, m).values - c.values).norm() <= 1e-13 * u.values.norm());
    for (int mp = 0; mp <= 6; ++mp)
      if (mp != m) CHECK(cluster_project(c, mp).values.norm() <= 1e-13 * u.values.norm());
  }
  const int M = 5;
  GridField sum(g);
  for (int m = 0; m <= M; ++m) sum.values += cluster_project(u, m).values;
  const LatticeMultiplier band =
      make_multiplier(g, [M](std::span<const int> k) {
        double s = 0;
        for (int v : k) s += double(v) * v;
        return Complex(s < double(M + 1) * (M + 1) ? 1.0 : 0.0);
      });
  CHECK(rel(sum, apply_multiplier(band, u)) < 1e-13);
}

TEST_CASE("pi_jk projections") {
  const TorusGrid g({16, 16});
  const GridField u = plane_wave(g, {2, 3});
  const std::vector<int> k3{3}, k2{2};
  CHECK(rel(pi_jk_project(u, 2, k3), u) < 1e-13);
  CHECK(pi_jk_project(u, 2, k2).values.norm() < 1e-12);
  CHECK(pi_jk_project(u, 1, k3).values.norm() < 1e-12);

  const TorusGrid g3({8, 8, 8});
  const GridField r = random_field(g3, 9, 4);
  GridField total(g3);
  for (int j = -3; j <= 3; ++j)
    for (int a = -3; a <= 3; ++a)
      for (int b = -3; b <= 3; ++b) total.values += pi_jk_project(r, j, std::vector<int>{a, b}).values;
  CHECK(rel(total, r) < 1e-13);
  const GridField p1 = pi_jk_project(r, 1, std::vector<int>{0, 2});
  const GridField p2 = pi_jk_project(r, 1, std::vector<int>{2, 0});
  CHECK(std::abs(inner(p1, p2)) < 1e-12 * lp_norm(r, 2.0) * lp_norm(r, 2.0));
}

TEST_CASE("lp norms") {
  const TorusGrid g = TorusGrid::cube(3, 8);
  GridField one(g);
  one.values.setOnes();
  for (double p : {1.0, 1.2, 2.0, 6.0})
    CHECK(lp_norm(one, p) == doctest::Approx(std::pow(2.0 * kPi, 3.0 / p)).epsilon(1e-13));
  CHECK(lp_norm(one, kInfinity) == 1.0);

  testsupport::Gen gen(34);
  for (int i = 0; i < 20; ++i) {
    const GridField u = random_field(g, 200 + i, 4);
    const double l2 = lp_norm(u, 2.0);
    CHECK(l2 * l2 <= lp_norm(u, 1.2) * lp_norm(u, 6.0) * (1.0 + 1e-12));
    CHECK(lp_norm(u, kInfinity) == doctest::Approx(u.values.cwiseAbs().maxCoeff()));
  }
  CHECK_THROWS_AS(lp_norm(one, 0.5), DomainError);
}

TEST_CASE("oversampled norms interpolate band-limited fields") {
  const TorusGrid g = TorusGrid::cube(2, 16);
  const GridField u = random_field(g, 5, 6);
  const GridField big = zero_pad(u, 2);
  // Samples on the coarse sub-lattice are unchanged.
  std::vector<int> idx(2);
  double err = 0.0;
  for (Index i = 0; i < g.points(); ++i) {
    g.unravel(i, idx);
    std::vector<int> b{2 * idx[0], 2 * idx[1]};
    err = std::max(err, std::abs(big.values[big.grid.ravel(b)] - u.values[i]));
  }
  CHECK(err < 1e-12);
  CHECK(lp_norm(big, 2.0) == doctest::Approx(lp_norm(u, 2.0)).epsilon(1e-12));
  // A real field stays real after padding, Nyquist content included.
  GridField real(g);
  testsupport::Gen gen(35);
  for (Index i = 0; i < g.points(); ++i) real.values[i] = gen.normal();
  CHECK(zero_pad(real, 2).values.imag().cwiseAbs().maxCoeff() < 1e-12);
  // L^6 of a smooth field converges under refinement.
  auto f = [](std::span<const double> x) { return Complex(std::exp(std::cos(x[0]) * std::sin(x[1]))); };
  const double fine = lp_norm(sample(TorusGrid::cube(2, 128), f), 6.0);
  CHECK(std::abs(lp_norm_oversampled(sample(TorusGrid::cube(2, 32), f), 6.0) - fine) < 1e-8 * fine);
}
