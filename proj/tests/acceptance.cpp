// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [path-to-resolab-cli] [criterion ...]

#include <boost/rational.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "resolab/bessel.hpp"
#include "resolab/carleman.hpp"
#include "resolab/experiments.hpp"
#include "resolab/metric.hpp"
#include "resolab/osc.hpp"
#include "resolab/parametrix.hpp"
#include "resolab/region.hpp"
#include "resolab/transport.hpp"

using namespace resolab;

namespace {

using Clock = std::chrono::steady_clock;
using Rational = boost::rational<long long>;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) { return format_double(v); }

// Bessel kernels

void criterion1(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> re(0.1, 50.0), im(-50.0, 50.0);
  double k_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Complex w(re(rng), im(rng));
    const Complex exact = std::sqrt(kPi / (2.0 * w)) * std::exp(-w);
    k_err = std::max(k_err, std::abs(bessel_k(0.5, w).value - exact) / std::abs(exact));
  }
  // dF_nu/dr = -(r/2) F_{nu-1} by central differences
  std::uniform_real_distribution<double> rr(0.1, 3.0), mag(0.5, 20.0), arg(-2.5, 2.5);
  double rec = 0.0;
  for (int n : {3, 4, 5})
    for (int nu = 1; nu <= default_transport_order(n); ++nu) {
      const FNuParams p = make_fnu_params(n, nu), pm = make_fnu_params(n, nu - 1);
      for (int i = 0; i < 50; ++i) {
        const double r = rr(rng), h = 1e-4;
        const Complex z = std::polar(mag(rng), arg(rng));
        const Complex fd = (f_nu(r + h, z, p) - f_nu(r - h, z, p)) / (2 * h);
        const Complex target = -0.5 * r * f_nu(r, z, pm);
        rec = std::max(rec, std::abs(fd - target) / std::abs(target));
      }
    }
  // n = 3: F_0 = e^{-sqrt(z) r} / (4 pi r)
  std::uniform_real_distribution<double> r3(0.05, 4.0), lz(-3.0, std::log10(400.0)), az(-kPi, kPi);
  double f0 = 0.0;
  const FNuParams p0 = make_fnu_params(3, 0);
  for (int i = 0; i < 100; ++i) {
    const double r = r3(rng);
    const Complex z = std::polar(std::pow(10.0, lz(rng)), az(rng) * 0.999);
    const Complex closed = std::exp(-sqrt_principal(z) * r) / (4 * kPi * r);
    f0 = std::max(f0, std::abs(f_nu(r, z, p0) - closed) / std::abs(closed));
  }
  o.require(k_err <= 1e-8, "K_1/2 relative error <= 1e-8");
  o.require(rec <= 1e-4, "recursion residual <= 1e-4");
  o.require(f0 <= 1e-6, "F_0 closed form <= 1e-6");
  o.detail << "K_1/2 rel err " << fmt(k_err) << ", recursion " << fmt(rec) << ", F_0 " << fmt(f0);
}

// Region geometry

void criterion2(Outcome& o) {
  bool all = true;
  for (int n = 3; n <= 12; ++n) {
    const Rational d(2, n + 1);
    all = all && sigma_decay_first_branch(d, n) == sigma_decay_second_branch(d, n) &&
          sigma_decay(d, n) == Rational(1, n + 1);
  }
  const auto ex = resolvent_exponents<Rational>(3);
  const bool inside = ex.p == Rational(6, 5) && ex.q == Rational(6) &&
                      classify_pair(ex.p, ex.q, 3) == RegionLabel::trapezium;
  o.require(all, "branches agree exactly at d = 2/(n+1), n = 3..12");
  o.require(inside, "(6/5, 6) in the trapezium for n = 3");
  o.detail << "sigma branches agree for n = 3..12: " << (all ? "yes" : "no") << ", (6/5,6) -> "
           << to_string(classify_pair(ex.p, ex.q, 3));
}

// Parametrix on 64^2 chart grids

Index grid_index(const ChartGrid& g, int i, int j) {
  const int idx[2] = {i, j};
  return g.ravel(idx);
}

void criterion3(Outcome& o) {
  const Clock::time_point t0 = Clock::now();
  const int per_axis = 64;

  const MetricChart flat = flat_chart(2, 0.5);
  const ChartGrid fg = ChartGrid::covering(flat, per_axis);
  const TransportCoefficients ftc = transport_coefficients(flat, fg, {grid_index(fg, 32, 32), grid_index(fg, 18, 40)});
  double higher = 0.0;
  for (const CenterTransport& ct : ftc.centers)
    for (int nu = 1; nu <= ct.order; ++nu)
      for (Index i = 0; i < fg.points(); ++i)
        if (ct.alpha_valid[nu][i]) higher = std::max(higher, std::abs(ct.alpha[nu][i]));

  const MetricChart sphere = sphere_chart(2, 0.6);
  const ChartGrid sg = ChartGrid::covering(sphere, per_axis);
  TransportOptions so;
  so.reach = 0.45;
  const TransportCoefficients stc =
      transport_coefficients(sphere, sg, {grid_index(sg, 32, 32), grid_index(sg, 25, 40)}, so);
  double je = 0.0, ae = 0.0;
  long samples = 0;
  for (const CenterTransport& ct : stc.centers)
    for (Index i = 0; i < sg.points(); ++i) {
      if (!ct.geodesic_valid[i] || i == ct.center) continue;
      const double r = ct.distance[i];
      je = std::max(je, std::abs(ct.jacobian[i] - std::sin(r) / r));
      ae = std::max(ae, std::abs(ct.alpha[0][i] - std::sqrt(r / std::sin(r))));
      ++samples;
    }

  // |H_N| <= C |z|^{-1/2}: C fixed at |z| = 4 bounds the ladder
  const MetricChart wide = sphere_chart(2, 0.9);
  // 64 cells per axis, centred on the origin
  const ChartGrid wg = ChartGrid::covering(wide, per_axis + 1);
  std::vector<Index> centers;
  for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 0}, {7, 0}, {-7, 0}, {0, 7}, {0, -7}})
    centers.push_back(grid_index(wg, 32 + a, 32 + b));
  TransportOptions wo;
  wo.reach = 0.75;
  const TransportCoefficients wtc = transport_coefficients(wide, wg, centers, wo);
  ParametrixOptions po;
  po.rho = 0.8;
  std::vector<double> scaled;
  for (double mag : {4.0, 16.0, 64.0})
    scaled.push_back(hn_sup(assemble_parametrix(wtc, wide, std::polar(mag, kPi / 3), po)) * std::sqrt(mag));
  const double c = scaled[0];
  bool bounded = c > 0.0;
  for (double v : scaled) bounded = bounded && v <= c;
  const double elapsed = seconds_since(t0);

  o.require(higher <= 1e-10, "flat alpha_nu, nu >= 1, vanish to 1e-10");
  o.require(je <= 1e-4 && ae <= 1e-4 && samples > 1000, "sphere J and alpha_0 to 1e-4");
  o.require(bounded, "single C over |z| in {4, 16, 64}");
  o.require(elapsed < 120.0, "runtime < 2 min");
  o.detail << "flat max|alpha_nu>=1| " << fmt(higher) << ", sphere J err " << fmt(je) << ", alpha_0 err " << fmt(ae)
           << " (" << samples << " pts), |H_N||z|^{1/2} = " << fmt(scaled[0]) << ", " << fmt(scaled[1]) << ", "
           << fmt(scaled[2]) << ", " << fmt(elapsed) << " s";
}

// Resolvent uniformity on T^3

void criterion4(Outcome& o, int workers) {
  const Clock::time_point t0 = Clock::now();
  ResolventSweepConfig cfg;  // n = 3, N = 48, delta = 0.5, 60 points, |z| <= 400, exterior lambda_k = 100
  cfg.workers = workers;
  const ResolventSweep sweep = run_resolvent_sweep(cfg);
  const double elapsed = seconds_since(t0);

  bool in_region = true, l2_ok = true, witnessed = true;
  int region_rows = 0;
  for (size_t i = 0; i + 1 < sweep.rows.size(); ++i) {
    const ResolventRow& r = sweep.rows[i];
    ++region_rows;
    in_region = in_region && r.in_region && !r.singular;
    l2_ok = l2_ok && r.l2_exact <= r.l2_bound * (1.0 + 1e-12);
    double k2 = 0.0;
    for (int k : r.witness) k2 += double(k) * k;
    witnessed = witnessed && !r.witness.empty() && std::abs(1.0 / std::abs(k2 + r.z) - r.l2_exact) <= 1e-14 * r.l2_exact;
  }
  const double spread = sweep.region_max / sweep.region_min;
  const double exterior = sweep.exterior_lower_bound / sweep.region_max;
  o.require(region_rows == 60 && in_region, "60 in-region points");
  o.require(spread <= 5.0, "max/min <= 5");
  o.require(exterior >= 10.0, "exterior >= 10x in-region max");
  o.require(l2_ok && witnessed, "L2 bound with witnessing k");
  o.require(elapsed < 900.0, "runtime < 15 min");
  o.detail << "6/5->6 lower bounds in [" << fmt(sweep.region_min) << ", " << fmt(sweep.region_max) << "], max/min "
           << fmt(spread) << ", exterior " << fmt(sweep.exterior_lower_bound) << " (" << fmt(exterior)
           << "x), L2 bound holds with witness at all points: " << (l2_ok && witnessed ? "yes" : "no") << ", "
           << fmt(elapsed) << " s";
}

// Carleman ratios

void criterion5(Outcome& o) {
  const Clock::time_point t0 = Clock::now();
  const TorusGrid grid({2048, 8, 8});
  const GridField u = carleman_bump(grid);
  std::vector<double> ratios;
  for (double tau : {8.0, 16.0, 32.0, 64.0}) ratios.push_back(carleman_ratio(u, tau).ratio);
  const double growth = ratios.back() / ratios.front();
  const double bound = *std::max_element(ratios.begin(), ratios.end());

  double worst_sum = 0.0;
  for (double tau : {8.0, 16.0, 32.0})
    for (int nu = 1; nu <= 5; ++nu)
      worst_sum = std::max(worst_sum, error_sum_bound(tau, nu, static_cast<int>(4 * tau)));

  const TorusGrid scan({256, 32, 32});
  bool symbol_ok = true;
  double worst_margin = kInfinity;
  for (double tau : {1.0, 8.0, 16.0, 32.0, 64.0, -8.0}) {
    const SymbolMin s = s1_lattice_min(scan, tau);
    symbol_ok = symbol_ok && s.value >= std::abs(tau);
    worst_margin = std::min(worst_margin, s.value / std::abs(tau));
  }
  const double elapsed = seconds_since(t0);
  o.require(growth <= 1.5, "last/first <= 1.5");
  o.require(worst_sum <= 4 * kPi, "error sums <= 4 pi");
  o.require(symbol_ok, "|s1| >= |tau| on the lattice");
  o.require(elapsed < 600.0, "runtime < 10 min");
  o.detail << "ratios " << fmt(ratios[0]) << ", " << fmt(ratios[1]) << ", " << fmt(ratios[2]) << ", " << fmt(ratios[3])
           << " (last/first " << fmt(growth) << ", bound " << fmt(bound) << "), max error sum " << fmt(worst_sum)
           << ", min |s1|/|tau| " << fmt(worst_margin) << ", " << fmt(elapsed) << " s";
}

// Oscillatory decay in the plane

void criterion6(Outcome& o, int workers) {
  const Clock::time_point t0 = Clock::now();
  DecayOptions opt;
  opt.workers = workers;
  opt.power.seeds = 2;
  const OscKernelSpec spec = distance_spec({32, 64, 128, 256});
  const DecayFit l2 = decay_fit(spec, 2.0, 2.0, opt);
  const DecayFit cs = decay_fit(spec, 2.0, 6.0, opt);
  const double elapsed = seconds_since(t0);
  o.require(l2.valid && l2.slope <= -0.35, "L2 slope <= -0.35");
  o.require(cs.valid && cs.regime == DecayRegime::carleson_sjolin && cs.slope <= -1.0 / 3.0 + 0.15,
            "(2,6) slope <= -1/3 + 0.15");
  o.require(elapsed < 300.0, "runtime < 5 min");
  o.detail << "L2 slope " << fmt(l2.slope) << " +- " << fmt(l2.half_width) << " (theory -0.5), (2,6) slope "
           << fmt(cs.slope) << " +- " << fmt(cs.half_width) << " (theory " << fmt(cs.theoretical_slope) << "), "
           << fmt(elapsed) << " s";
}

// Spectral clusters on T^3

void criterion7(Outcome& o, int workers) {
  const Clock::time_point t0 = Clock::now();
  PowerIterOptions opt;
  opt.seeds = 2;
  const ClusterGrowth g = cluster_growth(TorusGrid::cube(3, 48), 12, 2.0, 6.0, opt, workers);
  const double elapsed = seconds_since(t0);
  o.require(g.exponent <= 0.65, "growth exponent <= 0.65");
  o.require(elapsed < 300.0, "runtime < 5 min");
  o.detail << "growth exponent " << fmt(g.exponent) << " (theory 0.5), |chi_12| >= " << fmt(g.estimates.back().lower_bound)
           << ", " << fmt(elapsed) << " s";
}

// Byte-identical CSV from two CLI runs

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion8(Outcome& o, const std::string& cli) {
  if (cli.empty()) {
    o.require(false, "path to the resolab CLI");
    return;
  }
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"resolvent-sweep", "-N 16 --points 10 --z-max 100 --set exterior_lambda=25 --set seeds=1"},
      {"bessel-check", "--n 3,4 --r-list 0.5,2 --z-list 1,4:1"},
      {"parametrix-build", "--metric sphere --n 2 --grid 33 --z 4:1 --rho 0.4"},
      {"carleman-sweep", "--tau-list 8,16 --grid 2048x8x8 --u mode:1,1"},
      {"osc-decay", "--phase bilinear --p 2 --q 2 --lambda-ladder 4,8,16,32"},
      {"cluster-probe", "--grid 16 --m-max 4"},
  };
  int identical = 0;
  for (const auto& [sub, flags] : runs) {
    std::string first;
    bool same = true;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string out = "acceptance_" + sub + "_" + std::to_string(rep) + ".csv";
      // worker count differs between the two runs
      const std::string cmd = "\"" + cli + "\" " + sub + " " + flags + " --seed 7 --workers " +
                              std::to_string(rep + 1) + " --out " + out + " 2>/dev/null";
      const int status = std::system(cmd.c_str());
      const std::string text = slurp(out);
      std::remove(out.c_str());
      if (sub == "parametrix-build") {
        const std::string diag = "acceptance_" + sub + "_" + std::to_string(rep) + ".residual.csv";
        std::remove(diag.c_str());
      }
      if (status != 0 || text.empty()) same = false;
      if (rep == 0)
        first = text;
      else
        same = same && text == first;
    }
    if (same) ++identical;
    o.require(same, sub + " byte-identical");
  }
  o.detail << identical << "/" << runs.size() << " subcommands byte-identical across two runs (workers 1 and 2)";
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (!a.empty() && std::isdigit(static_cast<unsigned char>(a[0])) && a.size() <= 2)
      only.insert(std::stoi(a));
    else
      cli = a;
  }
  const int workers = 1;
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"bessel kernels", criterion1},
      {"region geometry", criterion2},
      {"parametrix", criterion3},
      {"resolvent uniformity", [&](Outcome& o) { criterion4(o, workers); }},
      {"carleman", criterion5},
      {"oscillatory decay", [&](Outcome& o) { criterion6(o, workers); }},
      {"cluster probe", [&](Outcome& o) { criterion7(o, workers); }},
      {"determinism", [&](Outcome& o) { criterion8(o, cli); }},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
