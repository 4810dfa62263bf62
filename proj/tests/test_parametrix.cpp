#include <doctest.h>

#include <cmath>

#include "resolab/bessel.hpp"
#include "resolab/cutoff.hpp"
#include "resolab/metric.hpp"
#include "resolab/parametrix.hpp"
#include "resolab/transport.hpp"
#include "test_support.hpp"

using namespace resolab;

namespace {

ChartVector vec(std::initializer_list<double> v) {
  ChartVector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Non-conformal metric within 0.2 of the identity on [-0.5, 0.5]^2.
MetricChart wavy_chart() {
  MetricChart c;
  c.n = 2;
  c.lo = vec({-0.5, -0.5});
  c.hi = vec({0.5, 0.5});
  c.g = [](const ChartVector& x) {
    ChartMatrix m(2, 2);
    m(0, 0) = 1.0 + 0.15 * std::sin(2.0 * x[1]);
    m(1, 1) = 1.0 - 0.1 * x[0] * x[0];
    m(0, 1) = m(1, 0) = 0.08 * std::cos(x[0] + x[1]);
    return m;
  };
  c.validate();
  return c;
}

// Centre of a grid with an odd point count per axis.
Index middle(const ChartGrid& g) {
  std::vector<int> idx(g.n);
  for (int a = 0; a < g.n; ++a) idx[a] = g.counts[a] / 2;
  return g.ravel(idx.data());
}

}  // namespace

TEST_CASE("dyadic cutoffs form a partition of unity") {
  testsupport::Gen gen(61);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double r = i == 0 ? 0.0 : std::ldexp(gen.uniform(0.0, 1.0), gen.integer(-6, 12));
    double sum = psi0(r);
    for (int nu = 0; nu <= 14; ++nu) sum += psi(std::ldexp(r, -nu));
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  CHECK(worst <= 1e-12);
  // Supports.
  for (int i = 0; i <= 400; ++i) {
    const double r = i / 100.0;
    if (r <= 0.5) CHECK(psi0(r) == 1.0);
    if (r >= 1.0) CHECK(psi0(r) == 0.0);
    if (r < 0.5 || r > 2.0) CHECK(psi(r) == 0.0);
    CHECK(psi0(-r) == psi0(r));
  }
  // The nu = 0 piece of the decomposition absorbs psi_0.
  for (double r : {0.1, 0.7, 1.3, 1.9}) CHECK(dyadic_cutoff(0, r) == doctest::Approx(psi0(r) + psi(r)));
}

TEST_CASE("smooth step derivatives match finite differences") {
  const double h = 1e-5;
  for (double t : {0.05, 0.3, 0.5, 0.81, 0.97}) {
    const StepValue s = smooth_step(t);
    CHECK(s.d1 == doctest::Approx((smooth_step(t + h).value - smooth_step(t - h).value) / (2 * h)).epsilon(1e-6));
    CHECK(s.d2 == doctest::Approx((smooth_step(t + h).d1 - smooth_step(t - h).d1) / (2 * h)).epsilon(1e-5));
  }
  CHECK(smooth_step(0.5).value == doctest::Approx(0.5));
  const DistanceCutoff chi{0.8};
  for (double d : {0.45, 0.6, 0.75})
    CHECK(chi.d1(d) == doctest::Approx((chi(d + h) - chi(d - h)) / (2 * h)).epsilon(1e-6));
  CHECK(chi(0.39) == 1.0);
  CHECK(chi(0.8) == 0.0);
}

TEST_CASE("circle partition squares sum to one") {
  const CirclePartition c{kPi / 4};
  testsupport::Gen gen(62);
  for (int i = 0; i < 1000; ++i) {
    const double t = gen.uniform(-10.0, 10.0);
    CHECK(c.c0(t) * c.c0(t) + c.c1(t) * c.c1(t) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(c.c0(kPi) == 0.0);
  CHECK(c.c0(kPi + 0.7) == 0.0);
  CHECK(c.c1(0.0) == 0.0);
  CHECK(c.c1(-0.7) == 0.0);
  CHECK(c.c0(0.0) == 1.0);
}

TEST_CASE("global patching reconstructs the identity") {
  const TorusPatching patch{3};
  CHECK(patch.count() == 8);
  testsupport::Gen gen(63);
  for (int i = 0; i < 500; ++i) {
    const double x[3] = {gen.uniform(0, 2 * kPi), gen.uniform(0, 2 * kPi), gen.uniform(0, 2 * kPi)};
    double sum = 0.0;
    for (int j = 0; j < 8; ++j) sum += std::pow(patch.cutoff(j, x), 2);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
  const TorusGrid g = TorusGrid::cube(3, 16);
  const GridField u = random_field(g, 7, 4);
  const FieldOperator id = [](const GridField& v) { return v; };
  CHECK((patched_apply(patch, id, u).values - u.values).norm() <= 1e-13 * u.values.norm());
  // Each patch misses a slab around one corner.
  const GridField c0 = patch_cutoff(patch, 0, g);
  CHECK(c0.values.cwiseAbs().minCoeff() == 0.0);
}

TEST_CASE("flat geodesics are straight lines") {
  const MetricChart flat = flat_chart(3, 1.0);
  const ChartVector y = vec({0.1, -0.2, 0.3});
  const ChartVector theta = vec({0.6, 0.0, -0.8});
  const ChartVector x = exp_map(flat, y, theta, 0.5);
  CHECK((x - (y + 0.5 * theta)).norm() <= 1e-12);
  const ChartVector a = vec({0.4, 0.1, -0.3});
  CHECK(geodesic_distance(flat, a, y) == doctest::Approx((a - y).norm()).epsilon(1e-12));
  CHECK(volume_jacobian(flat, y, theta, 0.7) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(exp_map(flat, y, vec({1.0, 1.0, 0.0}), 0.5), DomainError);
  CHECK_THROWS_AS(exp_map(flat, y, theta, 3.0), DomainExitError);
}

TEST_CASE("round sphere geodesics") {
  const MetricChart s = sphere_chart(2, 0.6);
  const ChartVector o = vec({0.0, 0.0});
  const ChartVector e1 = unit_direction(s, o, vec({1.0, 0.0}));
  for (double r : {0.1, 0.4, 0.7, 1.0}) {
    const ChartVector x = exp_map(s, o, e1, r);
    CHECK(std::abs(sphere_distance(x, o) - r) <= 1e-8);
    CHECK(volume_jacobian(s, o, e1, r) == doctest::Approx(std::sin(r) / r).epsilon(1e-6));
  }
  // Unit speed along the path.
  const ChartVector y = vec({0.2, -0.1});
  const ChartVector theta = unit_direction(s, y, vec({-0.3, 0.5}));
  GeodesicOptions opt;
  opt.samples = 11;
  const GeodesicPath path = integrate_geodesic(s, y, 0.9 * theta, opt);
  CHECK(path.samples.size() == 11);
  CHECK(path.speed_drift <= 1e-8);
  // Off-centre Jacobian: the sphere is homogeneous.
  CHECK(volume_jacobian(s, y, theta, 0.6) == doctest::Approx(std::sin(0.6) / 0.6).epsilon(1e-6));
}

TEST_CASE("geodesic distance is symmetric and matches the great circle") {
  const MetricChart s = sphere_chart(2, 0.6);
  testsupport::Gen gen(64);
  double asym = 0.0, oracle = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ChartVector a = vec({gen.uniform(-0.3, 0.3), gen.uniform(-0.3, 0.3)});
    const ChartVector b = vec({gen.uniform(-0.3, 0.3), gen.uniform(-0.3, 0.3)});
    const double dab = geodesic_distance(s, a, b);
    asym = std::max(asym, std::abs(dab - geodesic_distance(s, b, a)));
    oracle = std::max(oracle, std::abs(dab - sphere_distance(a, b)));
  }
  CHECK(asym <= 1e-8);
  CHECK(oracle <= 1e-8);
}

TEST_CASE("Hessian of the squared distance at the diagonal is twice the metric") {
  const MetricChart c = wavy_chart();
  const double h = 1e-3;
  for (const ChartVector& y : {vec({0.0, 0.0}), vec({0.2, -0.15}), vec({-0.1, 0.25})}) {
    auto d2 = [&](double a, double b) {
      const double d = geodesic_distance(c, y + vec({a, b}), y);
      return d * d;
    };
    ChartMatrix hess(2, 2);
    hess(0, 0) = (d2(h, 0) - 2 * d2(0, 0) + d2(-h, 0)) / (h * h);
    hess(1, 1) = (d2(0, h) - 2 * d2(0, 0) + d2(0, -h)) / (h * h);
    hess(0, 1) = hess(1, 0) = (d2(h, h) - d2(h, -h) - d2(-h, h) + d2(-h, -h)) / (4 * h * h);
    CHECK((hess - 2.0 * c.g(y)).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("geodesic distance is equivalent to the Euclidean distance") {
  const MetricChart c = wavy_chart();
  testsupport::Gen gen(65);
  double lo = kInfinity, hi = 0.0;
  for (int i = 0; i < 60; ++i) {
    const ChartVector a = vec({gen.uniform(-0.25, 0.25), gen.uniform(-0.25, 0.25)});
    const ChartVector b = vec({gen.uniform(-0.25, 0.25), gen.uniform(-0.25, 0.25)});
    const double ratio = geodesic_distance(c, a, b) / (a - b).norm();
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(lo >= 1.0 / 1.5);
  CHECK(hi <= 1.5);
}

TEST_CASE("polar data and chart validation") {
  const MetricChart s = sphere_chart(2, 0.6);
  std::vector<ChartVector> dirs;
  for (int k = 0; k < 8; ++k) dirs.push_back(vec({std::cos(k * kPi / 4), std::sin(k * kPi / 4)}));
  const GeodesicPolarData pd = polar_data(s, vec({0.0, 0.0}), {0.0, 0.2, 0.5, 0.9, 1.3}, dirs);
  for (int d = 0; d < 8; ++d) {
    CHECK(pd.jacobian(d, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pd.jacobian(d, 3) > 0.0);
  }
  // Rays of length 1.3 leave the chart box, which caps the estimate.
  CHECK(pd.injectivity_estimate == doctest::Approx(0.9));

  MetricChart bad = flat_chart(2, 1.0);
  bad.g = [](const ChartVector& x) {
    ChartMatrix m = ChartMatrix::Identity(2, 2);
    m(1, 1) = x[0];
    return m;
  };
  CHECK_THROWS_AS(bad.validate(), DomainError);
  MetricChart skew = flat_chart(2, 1.0);
  skew.g = [](const ChartVector&) {
    ChartMatrix m = ChartMatrix::Identity(2, 2);
    m(0, 1) = 0.3;
    return m;
  };
  CHECK_THROWS_AS(skew.validate(), DomainError);
}

TEST_CASE("flat transport coefficients") {
  const MetricChart flat = flat_chart(2, 0.5);
  const ChartGrid grid = ChartGrid::covering(flat, 33);
  const TransportCoefficients tc = transport_coefficients(flat, grid, {middle(grid), grid.ravel(std::vector<int>{9, 20}.data())});
  CHECK(tc.order == 2);
  for (const CenterTransport& ct : tc.centers) {
    double a0 = 0.0, higher = 0.0;
    for (Index i = 0; i < grid.points(); ++i) {
      if (ct.alpha_valid[0][i]) a0 = std::max(a0, std::abs(ct.alpha[0][i] - 1.0));
      for (int nu = 1; nu <= ct.order; ++nu)
        if (ct.alpha_valid[nu][i]) higher = std::max(higher, std::abs(ct.alpha[nu][i]));
    }
    CHECK(a0 <= 1e-10);
    CHECK(higher <= 1e-10);
    CHECK(ct.alpha[0][ct.center] == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(default_transport_order(3) == 2);
  CHECK(default_transport_order(4) == 3);
  // A centre on the box boundary has no stencil.
  CHECK_THROWS_AS(center_transport(flat, grid, tc.geometry, 0), BoundaryError);
}

TEST_CASE("sphere transport matches the constant-curvature closed forms") {
  const MetricChart s = sphere_chart(2, 0.6);
  const ChartGrid grid = ChartGrid::covering(s, 41);
  TransportOptions opt;
  opt.reach = 0.45;
  const std::vector<Index> centers = {middle(grid), grid.ravel(std::vector<int>{16, 25}.data())};
  const TransportCoefficients tc = transport_coefficients(s, grid, centers, opt);
  for (const CenterTransport& ct : tc.centers) {
    CHECK(ct.alpha[0][ct.center] == doctest::Approx(1.0).epsilon(1e-12));
    double je = 0.0, ae = 0.0;
    int count = 0;
    for (Index i = 0; i < grid.points(); ++i) {
      if (!ct.geodesic_valid[i] || i == ct.center) continue;
      const double d = ct.distance[i];
      CHECK(d == doctest::Approx(sphere_distance(grid.point(i), ct.y)).epsilon(1e-8));
      je = std::max(je, std::abs(ct.jacobian[i] - std::sin(d) / d));
      ae = std::max(ae, std::abs(ct.alpha[0][i] - std::sqrt(d / std::sin(d))));
      ++count;
    }
    CHECK(count > 500);
    CHECK(je <= 1e-4);
    CHECK(ae <= 1e-4);
    // alpha_1(y, y) = Delta alpha_0 (y) = 1/3 on the unit sphere.
    CHECK(ct.alpha[1][ct.center] == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
  }
}

TEST_CASE("closed-form sphere Christoffel symbols match the derivative route") {
  const MetricChart s = sphere_chart(3, 0.7);
  MetricChart fd = s;
  fd.gamma = nullptr;
  fd.spray_jacobian = nullptr;
  testsupport::Gen gen(67);
  for (int t = 0; t < 20; ++t) {
    const ChartVector x = vec({gen.uniform(-0.6, 0.6), gen.uniform(-0.6, 0.6), gen.uniform(-0.6, 0.6)});
    const Christoffel a = s.christoffel(x), b = fd.christoffel(x);
    for (int l = 0; l < 3; ++l) CHECK((a[l] - b[l]).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // Variational solutions agree with the central-difference Jacobian.
  GeodesicOptions opt;
  opt.variational = true;
  const ChartVector y = vec({0.1, -0.2, 0.05}), xi = vec({0.3, 0.4, -0.2});
  const GeodesicPath p = integrate_geodesic(s, y, xi, opt), q = integrate_geodesic(fd, y, xi, opt);
  CHECK((p.end - q.end).norm() <= 1e-12);
  CHECK((p.dexp - q.dexp).cwiseAbs().maxCoeff() <= 1e-7);
}

namespace {

// Sphere transport about the origin of a 49^2 grid; the coordinate axes
// through the centre are geodesic rays.
const TransportCoefficients& sphere_rays() {
  static const TransportCoefficients tc = [] {
    const MetricChart s = sphere_chart(2, 0.6);
    const ChartGrid grid = ChartGrid::covering(s, 49);
    TransportOptions opt;
    opt.reach = 0.45;
    return transport_coefficients(s, grid, {middle(grid)}, opt);
  }();
  return tc;
}

// d/dr of samples f along a ray with nonuniform radii, three-point formula.
double ray_derivative(const std::vector<double>& r, const std::vector<double>& f, std::size_t k) {
  const double h0 = r[k] - r[k - 1], h1 = r[k + 1] - r[k];
  return (-h1 / (h0 * (h0 + h1))) * f[k - 1] + ((h1 - h0) / (h0 * h1)) * f[k] + (h0 / (h1 * (h0 + h1))) * f[k + 1];
}

}  // namespace

TEST_CASE("transport equations hold along radial rays") {
  const TransportCoefficients& tc = sphere_rays();
  const CenterTransport& ct = tc.centers[0];
  const ChartGrid& grid = tc.grid;
  const int mid = grid.counts[0] / 2;
  double zero_worst = 0.0, nu_worst = 0.0;
  int samples = 0;
  for (const auto& dir : std::vector<std::array<int, 2>>{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}) {
    std::vector<double> r, a0, jac;
    std::vector<std::vector<double>> tilde(ct.order + 1), beta(ct.order + 1);
    std::vector<Mask> ok;
    for (int k = 1;; ++k) {
      const int idx[2] = {mid + k * dir[0], mid + k * dir[1]};
      if (idx[0] < 0 || idx[1] < 0 || idx[0] >= grid.counts[0] || idx[1] >= grid.counts[1]) break;
      const Index i = grid.ravel(idx);
      if (!ct.laplacian_valid[ct.order - 1][i] || !ct.alpha_valid[ct.order][i]) break;
      r.push_back(ct.distance[i]);
      a0.push_back(ct.alpha[0][i]);
      jac.push_back(ct.jacobian[i]);
      for (int nu = 0; nu <= ct.order; ++nu) {
        tilde[nu].push_back(ct.alpha[nu][i] / ct.alpha[0][i]);
        beta[nu].push_back(ct.laplacian_valid[nu][i] ? ct.laplacian[nu][i] / ct.alpha[0][i] : std::nan(""));
      }
    }
    REQUIRE(r.size() >= 8);
    for (std::size_t k = 1; k + 1 < r.size(); ++k) {
      // d_r alpha_0 + (d_r J / 2 J) alpha_0 = 0
      const double res0 = ray_derivative(r, a0, k) + ray_derivative(r, jac, k) / (2.0 * jac[k]) * a0[k];
      zero_worst = std::max(zero_worst, std::abs(res0));
      // r d_r alpha~_nu + nu alpha~_nu - beta~_{nu-1} = 0
      for (int nu = 1; nu <= ct.order; ++nu) {
        const double res = r[k] * ray_derivative(r, tilde[nu], k) + nu * tilde[nu][k] - beta[nu - 1][k];
        nu_worst = std::max(nu_worst, std::abs(res));
      }
      ++samples;
    }
  }
  CHECK(samples >= 40);
  CHECK(zero_worst <= 1e-4);
  CHECK(nu_worst <= 1e-3);
}

TEST_CASE("grid Laplacian of d^2 matches the radial formula to second order") {
  // Delta_g f(r) = f'' + (n - 1) f' / r + (d_r J / J) f' with J = sin r / r.
  auto worst_error = [](int per_axis) {
    const MetricChart s = sphere_chart(2, 0.6);
    const ChartGrid grid = ChartGrid::covering(s, per_axis);
    TransportOptions opt;
    opt.reach = 0.4;
    opt.order = 1;
    const TransportCoefficients tc = transport_coefficients(s, grid, {middle(grid)}, opt);
    const CenterTransport& ct = tc.centers[0];
    Eigen::VectorXd f = ct.distance.array().square();
    Mask valid;
    const Eigen::VectorXd lap = grid_laplacian(grid, tc.geometry, f, ct.geodesic_valid, &valid);
    double worst = 0.0;
    for (Index i = 0; i < grid.points(); ++i) {
      // Compare on a fixed coordinate disc so both grids see the same region.
      if (!valid[i] || grid.point(i).norm() > 0.3) continue;
      const double r = ct.distance[i];
      const double djj = r > 0.0 ? 1.0 / std::tan(r) - 1.0 / r : 0.0;
      worst = std::max(worst, std::abs(lap[i] - (2.0 + 2.0 + 2.0 * r * djj)));
    }
    return worst;
  };
  const double coarse = worst_error(25), fine = worst_error(49);
  CHECK(fine <= 5e-3);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("leading singularity matches the flat fundamental solution") {
  // n = 3: d F -> 1 / (4 pi) as d -> 0 along several approach directions.
  const MetricChart s = sphere_chart(3, 0.3);
  const ChartGrid grid = ChartGrid::covering(s, 41);
  TransportOptions opt;
  opt.reach = 0.2;
  const TransportCoefficients tc = transport_coefficients(s, grid, {middle(grid)}, opt);
  const CenterTransport& ct = tc.centers[0];
  const Complex z(4.0, 1.0);
  std::vector<FNuParams> params;
  for (int nu = 0; nu <= ct.order; ++nu) params.push_back(make_fnu_params(3, nu));
  const int mid = grid.counts[0] / 2;
  for (const auto& dir : std::vector<std::array<int, 3>>{{1, 0, 0}, {0, -1, 0}, {1, 1, 0}, {1, -1, 1}, {-2, 1, 0}}) {
    std::vector<double> d;
    std::vector<Complex> value;
    for (int k = 1; k <= 3; ++k) {
      const int idx[3] = {mid + k * dir[0], mid + k * dir[1], mid + k * dir[2]};
      const Index i = grid.ravel(idx);
      REQUIRE(ct.alpha_valid[ct.order][i]);
      Complex f = 0.0;
      for (int nu = 0; nu <= ct.order; ++nu) f += ct.alpha[nu][i] * f_nu(ct.distance[i], z, params[nu]);
      d.push_back(ct.distance[i]);
      value.push_back(f * ct.distance[i]);
    }
    // Quadratic extrapolation in d to d = 0.
    Complex limit = 0.0;
    for (int a = 0; a < 3; ++a) {
      double w = 1.0;
      for (int b = 0; b < 3; ++b)
        if (b != a) w *= (0.0 - d[b]) / (d[a] - d[b]);
      limit += w * value[a];
    }
    CHECK(std::abs(limit - 1.0 / (4.0 * kPi)) <= 5e-3 / (4.0 * kPi));
  }
}

namespace {

struct SpreadKernel {
  MetricChart chart;
  TransportCoefficients tc;
};

// Five centres 0.2 apart on a sphere chart, so centre pairs sit in the outer regime.
const SpreadKernel& spread_kernel() {
  static const SpreadKernel sk = [] {
    SpreadKernel out{sphere_chart(2, 0.9), {}};
    const ChartGrid grid = ChartGrid::covering(out.chart, 73);
    const int mid = 36;
    std::vector<Index> centers;
    for (const auto& o : std::vector<std::array<int, 2>>{{0, 0}, {8, 0}, {-8, 0}, {0, 8}, {0, -8}}) {
      const int idx[2] = {mid + o[0], mid + o[1]};
      centers.push_back(grid.ravel(idx));
    }
    TransportOptions opt;
    opt.reach = 0.65;
    out.tc = transport_coefficients(out.chart, grid, centers, opt);
    return out;
  }();
  return sk;
}

}  // namespace

TEST_CASE("large-distance form of the kernel is bounded, also for the transpose") {
  const SpreadKernel& sk = spread_kernel();
  ParametrixOptions po;
  po.rho = 0.8;
  double direct = 0.0, transpose = 0.0, smallest = kInfinity;
  int outer = 0;
  for (double mag : {16.0, 64.0, 256.0, 1024.0})
    for (double arg : {0.0, kPi / 2, 3 * kPi / 4}) {
      const Complex z = std::polar(mag, arg);
      const ParametrixKernel k = assemble_parametrix(sk.tc, sk.chart, z, po);
      const Complex root = std::sqrt(z);
      auto form = [&](Complex f, double d) {
        return std::abs(f) * std::exp(root.real() * d) * std::sqrt(d) * std::pow(mag, -0.25 + 0.5);
      };
      for (Index c = 0; c < k.kernel.cols(); ++c) {
        for (Index i = 0; i < k.kernel.rows(); ++i) {
          const double d = k.distance(i, c);
          if (k.cutoff(i, c) != 1.0 || d * std::sqrt(mag) < 1.0) continue;
          const double q = form(k.kernel(i, c), d);
          direct = std::max(direct, q);
          smallest = std::min(smallest, q);
          ++outer;
        }
        // Transpose: swap the roles of two centres.
        for (Index b = 0; b < k.kernel.cols(); ++b) {
          const double d = k.distance(k.sources[b], c);
          if (b == c || k.cutoff(k.sources[b], c) != 1.0 || d * std::sqrt(mag) < 1.0) continue;
          transpose = std::max(transpose, form(k.kernel(k.sources[c], b), k.distance(k.sources[c], b)));
        }
      }
    }
  CHECK(outer > 10000);
  // K_0 asymptotics give (2 pi)^{-1} (pi / 2)^{1/2} ~ 0.2 for the leading term.
  CHECK(direct <= 0.5);
  CHECK(smallest > 0.0);
  CHECK(transpose > 0.0);
  CHECK(transpose <= 0.5);
}

TEST_CASE("H_N decays like |z|^{-1/2} and S1 lives on the cutoff annulus") {
  const SpreadKernel& sk = spread_kernel();
  ParametrixOptions po;
  po.rho = 0.8;
  std::vector<double> scaled;
  for (double mag : {4.0, 16.0, 64.0}) {
    const ParametrixKernel k = assemble_parametrix(sk.tc, sk.chart, std::polar(mag, kPi / 3), po);
    scaled.push_back(hn_sup(k) * std::sqrt(mag));
    for (Index c = 0; c < k.s1.cols(); ++c)
      for (Index i = 0; i < k.s1.rows(); ++i) {
        if (k.cutoff(i, c) == 0.0) {
          CHECK(k.kernel(i, c) == Complex(0.0));
          CHECK(k.s1(i, c) == Complex(0.0));
        }
        if (k.distance(i, c) < po.rho / 2) CHECK(k.s1(i, c) == Complex(0.0));
      }
  }
  // One constant, fixed at |z| = 4, bounds the whole ladder.
  CHECK(scaled[0] > 0.0);
  for (double v : scaled) CHECK(v <= scaled[0]);
}

TEST_CASE("dyadic pieces reconstruct the kernel") {
  const MetricChart flat = flat_chart(2, 0.8);
  const ChartGrid grid = ChartGrid::covering(flat, 41);
  TransportOptions opt;
  opt.reach = 0.75;
  const TransportCoefficients tc = transport_coefficients(flat, grid, {middle(grid), middle(grid) + 3}, opt);
  ParametrixOptions po;
  po.rho = 0.4;
  for (double mag : {1.0, 64.0, 900.0}) {
    const Complex z = std::polar(mag, 0.4);
    const ParametrixKernel k = assemble_parametrix(tc, flat, z, po);
    const std::vector<DyadicPiece> pieces = dyadic_decompose(k);
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(k.kernel.rows(), k.kernel.cols());
    double reach = 0.0;
    for (Index c = 0; c < k.kernel.cols(); ++c)
      for (Index i = 0; i < k.kernel.rows(); ++i)
        if (k.cutoff(i, c) > 0.0) reach = std::max(reach, k.distance(i, c));
    const double scale = std::sqrt(mag);
    for (const DyadicPiece& piece : pieces) {
      sum += piece.kernel;
      for (Index c = 0; c < k.kernel.cols(); ++c)
        for (Index i = 0; i < k.kernel.rows(); ++i) {
          const double d = k.distance(i, c);
          if (piece.nu >= 1 && d < std::ldexp(1.0, piece.nu - 2) / scale) CHECK(piece.kernel(i, c) == Complex(0.0));
          if (k.cutoff(i, c) == 0.0) CHECK(piece.kernel(i, c) == Complex(0.0));
        }
    }
    CHECK((sum - k.kernel).cwiseAbs().maxCoeff() <= 1e-12 * k.kernel.cwiseAbs().maxCoeff());
    // Pieces nu >= 1 number log2(|z|^{1/2} reach) up to one.
    const int annular = static_cast<int>(pieces.size()) - 1;
    const double predicted = std::max(0.0, std::log2(scale * reach));
    CHECK(std::abs(annular - predicted) <= 1.0);
    for (const DyadicPiece& piece : pieces) CHECK(piece.kernel.cwiseAbs().maxCoeff() > 0.0);
  }
}

namespace {

// Smooth bump of coordinate radius R about the origin, nonzero only on sources.
Eigen::VectorXcd bump_field(const ChartGrid& grid, double radius, std::vector<Index>& sources) {
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(grid.points());
  for (Index i = 0; i < grid.points(); ++i) {
    const double t = grid.point(i).norm() / radius;
    if (t >= 1.0) continue;
    sources.push_back(i);
    u[i] = std::exp(-1.0 / (1.0 - t * t));
  }
  return u;
}

ResidualReport residual_case(bool sphere, double h, double rho, double radius, Complex z) {
  // Room for the cutoff support plus the transport stencils.
  const int half = static_cast<int>(std::ceil((radius + (sphere ? 0.6 : 1.0) * rho) / h)) + 9;
  const MetricChart chart = sphere ? sphere_chart(2, half * h) : flat_chart(2, half * h);
  const ChartGrid grid = ChartGrid::covering(chart, 2 * half + 1);
  std::vector<Index> sources;
  const Eigen::VectorXcd u = bump_field(grid, radius, sources);
  TransportOptions opt;
  opt.reach = (sphere ? 0.575 : 1.0) * rho + 8 * grid.h;
  const TransportCoefficients tc = transport_coefficients(chart, grid, sources, opt);
  ParametrixOptions po;
  po.rho = rho;
  const ParametrixKernel k = assemble_parametrix(tc, chart, z, po);
  if (!sphere) CHECK(k.s2.cwiseAbs().maxCoeff() == 0.0);
  return residual_apply(k, chart, tc.geometry, u);
}

}  // namespace

TEST_CASE("parametrix identity on a flat chart") {
  const ResidualReport r = residual_case(false, 0.04, 0.5, 0.25, 1.0);
  CHECK(r.diagnostic.empty());
  CHECK(r.relative_l2 <= 0.05);
}

TEST_CASE("parametrix identity on a sphere chart") {
  const ResidualReport r = residual_case(true, 0.0227, 0.6, 0.15, 1.0);
  CHECK(r.diagnostic.empty());
  CHECK(r.relative_l2 <= 0.05);
}

TEST_CASE("residual reports an under-resolved diagonal") {
  const MetricChart flat = flat_chart(2, 1.0);
  const ChartGrid grid = ChartGrid::covering(flat, 41);
  TransportOptions opt;
  opt.reach = 0.75;
  const TransportCoefficients tc = transport_coefficients(flat, grid, {middle(grid)}, opt);
  ParametrixOptions po;
  po.rho = 0.3;
  const ParametrixKernel k = assemble_parametrix(tc, flat, Complex(400.0, 0.0), po);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(grid.points());
  u[middle(grid)] = 1.0;
  const ResidualReport r = residual_apply(k, flat, tc.geometry, u);
  CHECK(r.resolution == doctest::Approx(1.0));
  CHECK_FALSE(r.diagnostic.empty());
}

TEST_CASE("parametrix argument checks") {
  const MetricChart flat = flat_chart(2, 1.0);
  const ChartGrid grid = ChartGrid::covering(flat, 41);
  TransportOptions opt;
  opt.reach = 0.75;
  const TransportCoefficients tc = transport_coefficients(flat, grid, {middle(grid)}, opt);
  ParametrixOptions po;
  po.rho = 0.3;
  CHECK_THROWS_AS(assemble_parametrix(tc, flat, Complex(-4.0, 0.0), po), DomainError);
  CHECK_THROWS_AS(assemble_parametrix(tc, flat, Complex(0.5, 0.5), po), DomainError);
  const ParametrixKernel k = assemble_parametrix(tc, flat, Complex(4.0, 0.0), po);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(grid.points());
  u[0] = 1.0;
  CHECK_THROWS_AS(parametrix_apply(k, u), DomainError);
  CHECK_THROWS_AS(parametrix_apply(k, Eigen::VectorXcd::Zero(3)), DomainError);
  // Cutoff support reaching past the transport region.
  po.rho = 0.9;
  CHECK_THROWS_AS(assemble_parametrix(tc, flat, Complex(4.0, 0.0), po), BoundaryError);
}

TEST_CASE("remainder growth exponents") {
  CHECK(remainder_growth_exponent(3, 2.0, 2.0) == doctest::Approx(0.0));
  CHECK(remainder_growth_exponent(3, 1.2, 6.0) == doctest::Approx(1.0 / 3.0));
  // n = 3: lower line 1/q = p'^{-1} / 2, upper 1/q = 2 / p'.
  CHECK(remainder_growth_exponent(3, 2.0, kInfinity) == doctest::Approx(0.5));
  CHECK(remainder_growth_exponent(3, 1.0, 2.0) == doctest::Approx(0.5 - 0.0));
  // The three branches agree on the dividing lines.
  testsupport::Gen gen(71);
  for (int t = 0; t < 200; ++t) {
    const int n = gen.integer(2, 8);
    const double ip = gen.uniform(0.5, 1.0);
    const double ipd = 1.0 - ip;
    for (double iq : {(n - 1.0) / (n + 1.0) * ipd, (n + 1.0) / (n - 1.0) * ipd}) {
      if (iq > 0.5) continue;
      const double p = 1.0 / ip, q = iq > 0.0 ? 1.0 / iq : kInfinity;
      const double mid = 0.25 * (n - 1) * (ip - iq);
      CHECK(remainder_growth_exponent(n, p, q) == doctest::Approx(mid).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(remainder_growth_exponent(3, 3.0, 2.0), DomainError);
  CHECK_THROWS_AS(remainder_growth_exponent(1, 2.0, 2.0), DomainError);
  const std::vector<double> x = {1.0, 2.0, 4.0, 8.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.7));
  CHECK(loglog_slope(x, y) == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK_THROWS_AS(loglog_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("flat torus parametrix identity") {
  const TorusGrid grid = TorusGrid::cube(3, 32);
  const Complex root(0.5, std::sqrt(15.75));
  const TorusParametrix tp = flat_torus_parametrix(grid, root * root, 1.5);
  CHECK(torus_identity_defect(tp, 6) <= 0.1);
  // Symbols against the direct operators on a random field.
  const GridField u = random_field(grid, 5, 6);
  const GridField lhs = helmholtz_apply(torus_parametrix_apply(tp, u), tp.z);
  const GridField s = torus_remainder_apply(tp, u);
  double defect = 0.0, scale = 0.0;
  for (Index i = 0; i < grid.points(); ++i) {
    defect = std::max(defect, std::abs(lhs.values[i] - u.values[i] - s.values[i]));
    scale = std::max(scale, std::abs(s.values[i]));
  }
  CHECK(defect <= 0.1 * scale);
  // Adjoint pairing.
  const GridField v = random_field(grid, 6, 6);
  CHECK(std::abs(inner(torus_remainder_apply(tp, u), v) - inner(u, torus_remainder_adjoint(tp, v))) <=
        1e-10 * std::abs(inner(torus_remainder_apply(tp, u), v)) + 1e-14);
  CHECK_THROWS_AS(flat_torus_parametrix(grid, Complex(16.0, 0.0), 3.5), DomainError);
}

TEST_CASE("remainder norm growth on the flat three-torus") {
  // Re sqrt(z) = 1/2 along the ladder, the slowest-decaying direction.
  const TorusGrid grid = TorusGrid::cube(3, 48);
  std::vector<Complex> zs;
  for (double mag : {4.0, 16.0, 64.0, 256.0}) {
    const Complex root(0.5, std::sqrt(mag - 0.25));
    zs.push_back(root * root);
  }
  PowerIterOptions opt;
  opt.seeds = 2;
  opt.max_iters = 60;
  const RemainderSweep l2 = remainder_norm_sweep(grid, zs, 2.0, 2.0, 1.5, opt);
  CHECK(l2.predicted_exponent == doctest::Approx(0.0));
  CHECK(l2.fitted_slope <= 0.1);
  const RemainderSweep mixed = remainder_norm_sweep(grid, zs, 1.2, 6.0, 1.5, opt);
  CHECK(mixed.predicted_exponent == doctest::Approx(1.0 / 3.0));
  CHECK(mixed.fitted_slope <= 1.0 / 3.0 + 0.15);
  for (const RemainderRow& row : mixed.rows) CHECK(row.lower_bound >= 0.0);
  REQUIRE(l2.rows.size() == 4);
  CHECK(l2.rows[2].abs_z == doctest::Approx(64.0));
}

TEST_CASE("interpolated radial tables match direct kernel evaluation") {
  const SpreadKernel& sk = spread_kernel();
  ParametrixOptions po;
  po.rho = 0.8;
  const CenterTransport& ct = sk.tc.centers[0];
  std::vector<FNuParams> params;
  for (int nu = 0; nu <= ct.order; ++nu) params.push_back(make_fnu_params(2, nu));
  testsupport::Gen gen(73);
  for (const Complex z : {Complex(4.0, 1.0), Complex(-200.0, 30.0), Complex(900.0, 0.0)}) {
    const ParametrixKernel k = assemble_parametrix(sk.tc, sk.chart, z, po);
    const DistanceCutoff chi{po.rho};
    double worst = 0.0, worst_hn = 0.0, worst_s1 = 0.0;
    int annulus = 0;
    for (int t = 0; t < 600; ++t) {
      const Index i = gen.integer(0, static_cast<int>(k.grid.points()) - 1);
      if (i == ct.center || k.cutoff(i, 0) == 0.0) continue;
      const double d = k.distance(i, 0);
      Complex f = 0.0, df = 0.0;
      for (int nu = 0; nu <= ct.order; ++nu) {
        f += ct.alpha[nu][i] * f_nu(d, z, params[nu]);
        if (chi.d1(d) != 0.0) df += ct.alpha_dr[nu][i] * f_nu(d, z, params[nu]) + ct.alpha[nu][i] * f_nu_dr(d, z, params[nu]);
      }
      worst = std::max(worst, std::abs(k.kernel(i, 0) - k.cutoff(i, 0) * f) / std::abs(f));
      const Complex hn = ct.laplacian[ct.order][i] * f_nu(d, z, params[ct.order]);
      worst_hn = std::max(worst_hn, std::abs(k.hn(i, 0) - hn) / std::abs(hn));
      if (chi.d1(d) == 0.0) continue;
      const double djj = -2.0 * ct.alpha_dr[0][i] / ct.alpha[0][i];
      const Complex s1 = -2.0 * chi.d1(d) * df - (chi.d2(d) + chi.d1(d) * (1.0 / d + djj)) * f;
      worst_s1 = std::max(worst_s1, std::abs(k.s1(i, 0) - s1) / std::abs(s1));
      ++annulus;
    }
    CHECK(annulus > 20);
    CHECK(worst <= 1e-7);
    CHECK(worst_hn <= 1e-7);
    CHECK(worst_s1 <= 1e-7);
  }
}
