#include "resolab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "resolab/bessel.hpp"
#include "resolab/carleman.hpp"
#include "resolab/metric.hpp"
#include "resolab/osc.hpp"
#include "resolab/parallel.hpp"
#include "resolab/parametrix.hpp"
#include "resolab/region.hpp"
#include "resolab/torus.hpp"
#include "resolab/transport.hpp"

namespace resolab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, std::string_view seps) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || seps.find(s[i]) != std::string_view::npos) {
      const std::string_view piece = trim(s.substr(start, i - start));
      if (!piece.empty()) out.push_back(piece);
      start = i + 1;
    }
  }
  return out;
}

template <class T>
std::vector<T> parse_list(std::string_view text, T (*parse)(std::string_view)) {
  std::vector<T> out;
  for (std::string_view piece : split(text, ",;")) out.push_back(parse(piece));
  if (out.empty()) throw ConfigError("empty list '" + std::string(text) + "'");
  return out;
}

int parse_int_item(std::string_view s) { return static_cast<int>(parse_int(s)); }

}  // namespace

// Config

Config Config::parse(std::string_view text) {
  Config c;
  int line_no = 0;
  for (size_t pos = 0; pos <= text.size();) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    c.set(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(values_.at(key)) : fallback;
}

long Config::get_int(const std::string& key, long fallback) const {
  return has(key) ? parse_int(values_.at(key)) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = values_.at(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? parse_list<double>(values_.at(key), parse_double) : fallback;
}

std::vector<int> Config::get_ints(const std::string& key, const std::vector<int>& fallback) const {
  return has(key) ? parse_list<int>(values_.at(key), parse_int_item) : fallback;
}

Complex Config::get_complex(const std::string& key, Complex fallback) const {
  return has(key) ? parse_complex(values_.at(key)) : fallback;
}

std::vector<Complex> Config::get_complexes(const std::string& key, const std::vector<Complex>& fallback) const {
  return has(key) ? parse_list<Complex>(values_.at(key), parse_complex) : fallback;
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("expected a number, got '" + std::string(text) + "'");
  return v;
}

long parse_int(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("expected an integer, got '" + std::string(text) + "'");
  return v;
}

Complex parse_complex(std::string_view text) {
  text = trim(text);
  if (const size_t colon = text.find(':'); colon != std::string_view::npos)
    return {parse_double(text.substr(0, colon)), parse_double(text.substr(colon + 1))};
  if (!text.empty() && text.back() == 'i') {
    const std::string_view body = text.substr(0, text.size() - 1);
    // split at the last sign that is not an exponent sign or the leading one
    for (size_t k = body.size(); k-- > 1;) {
      if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
        const std::string_view im = body.substr(k);
        return {parse_double(body.substr(0, k)), im.size() == 1 ? (im[0] == '-' ? -1.0 : 1.0) : parse_double(im)};
      }
    }
    if (body.empty() || body == "+" || body == "-") return {0.0, body == "-" ? -1.0 : 1.0};
    return {0.0, parse_double(body)};
  }
  return {parse_double(text), 0.0};
}

std::vector<int> parse_grid(std::string_view text, int default_dim) {
  std::vector<int> sizes;
  for (std::string_view piece : split(text, "x,")) sizes.push_back(parse_int_item(piece));
  if (sizes.size() == 1 && default_dim > 1) sizes.assign(default_dim, sizes[0]);
  if (sizes.empty()) throw ConfigError("empty grid '" + std::string(text) + "'");
  for (int s : sizes)
    if (s < 8 || s % 2 != 0) throw ConfigError("grid sizes must be even and >= 8, got '" + std::string(text) + "'");
  return sizes;
}

// CSV

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw DomainError("table row width does not match the header");
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return quote_if_needed(std::get<std::string>(c));
}

}  // namespace

std::string format_csv(const Table& table) {
  if (table.rows.empty()) throw DomainError("emit_csv: empty table");
  std::string out;
  for (size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + quote_if_needed(table.columns[c]);
  out += '\n';
  for (const auto& row : table.rows) {
    for (size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_cell(row[c]);
    out += '\n';
  }
  return out;
}

void emit_csv(const Table& table, const std::string& path) {
  const std::string text = format_csv(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

// Resolvent sweep

ResolventSweepConfig ResolventSweepConfig::from(const Config& c) {
  ResolventSweepConfig r;
  r.n = static_cast<int>(c.get_int("n", r.n));
  r.samples = static_cast<int>(c.get_int("N", r.samples));
  r.delta = c.get_double("delta", r.delta);
  r.z_max = c.get_double("z_max", r.z_max);
  r.points = static_cast<int>(c.get_int("points", r.points));
  r.p = c.get_double("p", 0.0);
  r.q = c.get_double("q", 0.0);
  r.exterior = c.get_bool("exterior", r.exterior);
  r.exterior_lambda = c.get_double("exterior_lambda", r.exterior_lambda);
  r.exterior_eta = c.get_double("exterior_eta", r.exterior_eta);
  r.seeds = static_cast<int>(c.get_int("seeds", r.seeds));
  r.max_iters = static_cast<int>(c.get_int("max_iters", r.max_iters));
  r.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long>(r.seed)));
  r.workers = static_cast<int>(c.get_int("workers", r.workers));
  if (r.n < 3) throw ConfigError("resolvent-sweep: n must be >= 3");
  if (r.samples < 8 || r.samples % 2) throw ConfigError("resolvent-sweep: N must be even and >= 8");
  if (!(r.delta > 0.0 && r.delta < 1.0)) throw ConfigError("resolvent-sweep: delta must lie in (0, 1)");
  if (r.points < 8) throw ConfigError("resolvent-sweep: points must be >= 8");
  if (r.seeds < 1 || r.max_iters < 1) throw ConfigError("resolvent-sweep: seeds and max_iters must be positive");
  return r;
}

std::vector<Complex> resolvent_z_grid(double delta, double z_max, int points) {
  static constexpr double kArgs[] = {0.0, kPi / 4, -kPi / 4, kPi / 2, -kPi / 2, 3 * kPi / 4, -3 * kPi / 4};
  const int radii = points / 10;
  const int hugging = points - 7 * radii;
  if (radii < 1) throw ConfigError("z-grid: need at least 10 points");
  // smallest radius inside Xi_delta on the steepest ray, with margin
  const double r0 = std::max(1.0, 1.2 * std::pow(delta / std::cos(3 * kPi / 8), 2));
  if (!(z_max > r0)) throw ConfigError("z-grid: z_max too small for delta");
  std::vector<Complex> zs;
  for (double arg : kArgs)
    for (int i = 0; i < radii; ++i) {
      const double r = radii == 1 ? z_max : r0 * std::pow(z_max / r0, static_cast<double>(i) / (radii - 1));
      zs.push_back(std::polar(r, arg));
    }
  // sqrt z = delta' + i t with |z| = delta'^2 + t^2 <= z_max
  const double dp = delta * (1.0 + 1e-3);
  const double t_max = std::sqrt(z_max - dp * dp) * (1.0 - 1e-9);
  const double t0 = 0.25;
  for (int i = 0; i < hugging; ++i) {
    const double t = hugging == 1 ? t_max : t0 * std::pow(t_max / t0, static_cast<double>(i) / (hugging - 1));
    const Complex w(dp, i % 2 == 0 ? t : -t);
    zs.push_back(w * w);
  }
  for (Complex z : zs)
    if (!in_xi_delta(z, delta) || std::abs(z) > z_max * (1.0 + 1e-12))
      throw NumericalError("z-grid point left Xi_delta");
  return zs;
}

namespace {

GridField plane_wave_field(const TorusGrid& grid, const std::vector<int>& k) {
  return sample(grid, [&](std::span<const double> x) {
    double phase = 0.0;
    for (size_t a = 0; a < k.size(); ++a) phase += k[a] * x[a];
    return std::polar(1.0, phase);
  });
}

bool lattice_has(const TorusGrid& grid, long value) {
  // brute force is fine at desk scale
  const int n = grid.dim();
  std::vector<int> k(n, 0);
  const int half = grid.size(0) / 2;
  std::function<bool(int, long)> rec = [&](int axis, long rest) {
    if (axis == n) return rest == 0;
    for (int j = -half + 1; j < half; ++j)
      if (static_cast<long>(j) * j <= rest && rec(axis + 1, rest - static_cast<long>(j) * j)) return true;
    return false;
  };
  return rec(0, value);
}

}  // namespace

ResolventSweep run_resolvent_sweep(const ResolventSweepConfig& config) {
  ResolventSweep sweep;
  const auto ex = resolvent_exponents<double>(config.n);
  sweep.p = config.p > 0.0 ? config.p : ex.p;
  sweep.q = config.q > 0.0 ? config.q : ex.q;
  const TorusGrid grid = TorusGrid::cube(config.n, config.samples);

  std::vector<Complex> zs = resolvent_z_grid(config.delta, config.z_max, config.points);
  const size_t region_count = zs.size();
  if (config.exterior) {
    const double lam = config.exterior_lambda;
    if (lam != std::round(lam) || !lattice_has(grid, static_cast<long>(lam)))
      throw ConfigError("exterior_lambda must be a represented lattice value |k|^2");
    zs.emplace_back(-lam, config.exterior_eta);
  }

  sweep.rows.resize(zs.size());
  parallel_for(static_cast<long>(zs.size()), config.workers, [&](long i) {
    ResolventRow& row = sweep.rows[i];
    row.z = zs[i];
    row.in_region = in_xi_delta(row.z, config.delta);
    const LatticeMin lm = resolvent_lattice_min(grid, row.z);
    row.witness = lm.k;
    row.l2_exact = lm.value > 0.0 ? 1.0 / lm.value : kInfinity;
    row.l2_bound = 1.0 / (std::sqrt(std::abs(row.z)) * sqrt_principal(row.z).real());
    try {
      const Complex z = row.z, zc = std::conj(row.z);
      PowerIterOptions opt;
      opt.seeds = config.seeds;
      opt.max_iters = config.max_iters;
      // per-point stream, independent of the worker count
      opt.seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(i);
      opt.initial_guesses.push_back(plane_wave_field(grid, lm.k).values);
      row.estimate = opnorm_power_iter([z](const GridField& u) { return resolvent_apply(u, z); },
                                       [zc](const GridField& u) { return resolvent_apply(u, zc); }, grid, grid,
                                       sweep.p, sweep.q, opt);
    } catch (const SingularError&) {
      row.singular = true;
    }
  });

  sweep.region_min = kInfinity;
  for (size_t i = 0; i < region_count; ++i) {
    if (sweep.rows[i].singular) continue;
    sweep.region_max = std::max(sweep.region_max, sweep.rows[i].estimate.lower_bound);
    sweep.region_min = std::min(sweep.region_min, sweep.rows[i].estimate.lower_bound);
  }
  if (config.exterior && !sweep.rows.back().singular) sweep.exterior_lower_bound = sweep.rows.back().estimate.lower_bound;
  return sweep;
}

namespace {

std::string join_ints(const std::vector<int>& k) {
  std::string s;
  for (size_t i = 0; i < k.size(); ++i) s += (i ? ";" : "") + std::to_string(k[i]);
  return s;
}

}  // namespace

Table resolvent_table(const ResolventSweep& sweep) {
  Table t;
  t.columns = {"re_z", "im_z", "abs_z", "re_sqrt_z", "in_region", "norm_lb", "iters", "converged",
               "l2_exact", "l2_bound", "witness_k", "status"};
  for (const ResolventRow& r : sweep.rows) {
    t.add({r.z.real(), r.z.imag(), std::abs(r.z), sqrt_principal(r.z).real(), static_cast<long long>(r.in_region),
           r.singular ? std::nan("") : r.estimate.lower_bound, static_cast<long long>(r.estimate.iterations),
           static_cast<long long>(r.estimate.converged), r.l2_exact, r.l2_bound, join_ints(r.witness),
           std::string(r.singular ? "singular" : "ok")});
  }
  return t;
}

// Bessel kernels

Table bessel_check_table(const Config& c) {
  const std::vector<int> ns = c.get_ints("n", {3});
  const std::vector<double> rs = c.get_doubles("r_list", {0.1, 0.5, 1.0, 2.0, 4.0});
  const std::vector<Complex> zs = c.get_complexes("z_list", {Complex(1.0), Complex(4.0, 1.0), Complex(-9.0, 0.1),
                                                            Complex(0.0, 100.0)});
  const long nu_max_key = c.get_int("nu_max", -1);
  const double tol = c.get_double("tol", 1e-12);
  struct Job {
    int n, nu;
    double r;
    Complex z;
  };
  std::vector<Job> jobs;
  for (int n : ns) {
    if (n < 2) throw ConfigError("bessel-check: n must be >= 2");
    const int nu_max = nu_max_key >= 0 ? static_cast<int>(nu_max_key) : default_transport_order(n);
    for (int nu = 0; nu <= nu_max; ++nu)
      for (double r : rs) {
        if (!(r > 0.0)) throw ConfigError("bessel-check: radii must be positive");
        for (Complex z : zs) {
          if (z.imag() == 0.0 && z.real() <= 0.0) throw ConfigError("bessel-check: z on the closed negative axis");
          jobs.push_back({n, nu, r, z});
        }
      }
  }
  std::vector<FNuEval> out(jobs.size());
  parallel_for(static_cast<long>(jobs.size()), static_cast<int>(c.get_int("workers", 1)), [&](long i) {
    out[i] = f_nu_eval(jobs[i].r, jobs[i].z, make_fnu_params(jobs[i].n, jobs[i].nu), tol);
  });
  Table t;
  t.columns = {"n", "nu", "r", "re_z", "im_z", "re_F", "im_F", "est_err"};
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (!std::isfinite(out[i].value.real()) || !std::isfinite(out[i].value.imag()))
      throw NumericalError("bessel-check: non-finite F_nu");
    t.add({static_cast<long long>(jobs[i].n), static_cast<long long>(jobs[i].nu), jobs[i].r, jobs[i].z.real(),
           jobs[i].z.imag(), out[i].value.real(), out[i].value.imag(), out[i].est_err});
  }
  return t;
}

// Parametrix

namespace {

// g_i_j = c a_1 .. a_n: affine entries c + a . x, symmetric completion.
MetricChart metric_from_file(const std::string& path) {
  const Config f = Config::load(path);
  MetricChart chart;
  chart.n = static_cast<int>(f.get_int("n", 2));
  if (chart.n < 2 || chart.n > kMaxChartDim) throw ConfigError("metric file: n out of range");
  const double hw = f.get_double("half_width", 1.0);
  if (!(hw > 0.0)) throw ConfigError("metric file: half_width must be positive");
  chart.lo = ChartVector::Constant(chart.n, -hw);
  chart.hi = ChartVector::Constant(chart.n, hw);
  const int n = chart.n;
  std::vector<std::vector<double>> coef(n * n, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n; ++i) coef[i * n + i][0] = 1.0;
  for (const auto& [key, value] : f.values()) {
    if (key == "n" || key == "half_width") continue;
    int i = -1, j = -1;
    if (std::sscanf(key.c_str(), "g_%d_%d", &i, &j) != 2 || i < 0 || j < 0 || i >= n || j >= n)
      throw ConfigError("metric file: unknown key '" + key + "'");
    std::vector<double> v;
    for (std::string_view piece : split(value, " \t")) v.push_back(parse_double(piece));
    if (v.empty() || static_cast<int>(v.size()) > n + 1) throw ConfigError("metric file: bad entry '" + key + "'");
    v.resize(n + 1, 0.0);
    coef[i * n + j] = v;
    coef[j * n + i] = v;
  }
  chart.g = [coef, n](const ChartVector& x) {
    ChartMatrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const auto& c = coef[i * n + j];
        double s = c[0];
        for (int a = 0; a < n; ++a) s += c[a + 1] * x[a];
        m(i, j) = s;
      }
    return m;
  };
  try {
    chart.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("metric file: ") + e.what());
  }
  return chart;
}

}  // namespace

Table parametrix_build_table(const Config& c, Table* diagnostics) {
  const std::string metric = c.get("metric", "flat");
  const int n = static_cast<int>(c.get_int("n", 2));
  MetricChart chart;
  if (metric == "flat") {
    chart = flat_chart(n, c.get_double("half_width", 1.0));
  } else if (metric == "sphere") {
    chart = sphere_chart(n, c.get_double("half_width", 0.9));
  } else if (metric == "file") {
    if (!c.has("metric_file")) throw ConfigError("parametrix-build: --metric file needs metric_file=PATH");
    chart = metric_from_file(c.get("metric_file", ""));
  } else {
    throw ConfigError("parametrix-build: metric must be flat, sphere or file");
  }
  if (chart.n < 2 || chart.n > kMaxChartDim) throw ConfigError("parametrix-build: n out of range");
  const int per_axis = static_cast<int>(c.get_int("grid", 65));
  if (per_axis < 9) throw ConfigError("parametrix-build: grid must be >= 9");
  const Complex z = c.get_complex("z", 4.0);
  const ChartGrid grid = ChartGrid::covering(chart, per_axis);

  ParametrixOptions po;
  po.rho = c.get_double("rho", 0.5);
  po.workers = static_cast<int>(c.get_int("workers", 1));
  TransportOptions to;
  to.order = static_cast<int>(c.get_int("N_order", -1));

  std::vector<int> mid(chart.n);
  for (int a = 0; a < chart.n; ++a) mid[a] = grid.counts[a] / 2;
  const Index center = grid.ravel(mid.data());
  // coordinate radius of the geodesic rho-ball, from the metric at the centre, plus stencil room
  const double lmin = Eigen::SelfAdjointEigenSolver<ChartMatrix>(chart.metric(grid.point(center))).eigenvalues()[0];
  to.reach = 1.15 * po.rho / std::sqrt(lmin) + 8 * grid.h;
  const TransportCoefficients tc = transport_coefficients(chart, grid, {center}, to, po.workers);
  const ParametrixKernel k = assemble_parametrix(tc, chart, z, po);
  const CenterTransport& ct = tc.centers[0];

  Table t;
  for (int a = 0; a < chart.n; ++a) t.columns.push_back("x" + std::to_string(a));
  for (const char* col : {"distance", "cutoff", "re_kernel", "im_kernel", "re_hn", "im_hn"}) t.columns.push_back(col);
  for (int nu = 0; nu <= ct.order; ++nu) t.columns.push_back("alpha_" + std::to_string(nu));
  double higher = 0.0;
  for (Index i = 0; i < grid.points(); ++i) {
    if (!(k.cutoff(i, 0) > 0.0)) continue;
    std::vector<Cell> row;
    const ChartVector x = grid.point(i);
    for (int a = 0; a < chart.n; ++a) row.push_back(x[a]);
    row.insert(row.end(), {k.distance(i, 0), k.cutoff(i, 0), k.kernel(i, 0).real(), k.kernel(i, 0).imag(),
                           k.hn(i, 0).real(), k.hn(i, 0).imag()});
    for (int nu = 0; nu <= ct.order; ++nu) {
      const bool ok = ct.alpha_valid[nu][i];
      row.push_back(ok ? ct.alpha[nu][i] : std::nan(""));
      if (ok && nu >= 1) higher = std::max(higher, std::abs(ct.alpha[nu][i]));
    }
    t.add(std::move(row));
  }

  if (diagnostics) {
    // smooth bump source: (-Delta_g + z) T u - u against S u
    const double radius = c.get_double("residual_radius", 0.15);
    if (!(radius > 0.0)) throw ConfigError("parametrix-build: residual_radius must be positive");
    const ChartVector y = grid.point(center);
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(grid.points());
    std::vector<Index> sources;
    for (Index i = 0; i < grid.points(); ++i) {
      const double t = (grid.point(i) - y).norm() / radius;
      if (t >= 1.0) continue;
      sources.push_back(i);
      u[i] = std::exp(-1.0 / (1.0 - t * t));
    }
    const TransportCoefficients btc = transport_coefficients(chart, grid, sources, to, po.workers);
    const ParametrixKernel bk = assemble_parametrix(btc, chart, z, po);
    const ResidualReport rep = residual_apply(bk, chart, btc.geometry, u);
    Table& d = *diagnostics;
    d = Table{};
    d.columns = {"quantity", "value"};
    d.add({std::string("order"), static_cast<long long>(ct.order)});
    d.add({std::string("h"), grid.h});
    d.add({std::string("rho"), po.rho});
    d.add({std::string("residual_radius"), radius});
    d.add({std::string("residual_sources"), static_cast<long long>(sources.size())});
    d.add({std::string("re_z"), z.real()});
    d.add({std::string("im_z"), z.imag()});
    d.add({std::string("resolution"), rep.resolution});
    d.add({std::string("relative_l2"), rep.relative_l2});
    d.add({std::string("hn_sup"), hn_sup(k)});
    d.add({std::string("alpha_higher_max"), higher});
    d.add({std::string("diagnostic"), rep.diagnostic.empty() ? std::string("ok") : rep.diagnostic});
  }
  return t;
}

// Carleman

Table carleman_sweep_table(const Config& c) {
  const std::vector<double> taus = c.get_doubles("tau_list", {8, 16, 32, 64});
  const TorusGrid grid(parse_grid(c.get("grid", "2048x8x8"), 3));
  const std::string u_spec = c.get("u", "bump");
  GridField u;
  if (u_spec == "bump") {
    u = carleman_bump(grid);
  } else if (u_spec.rfind("mode:", 0) == 0) {
    const auto jk = split(std::string_view(u_spec).substr(5), ",");
    if (jk.size() != 2) throw ConfigError("carleman-sweep: expected --u mode:j,k");
    if (grid.dim() < 2) throw ConfigError("carleman-sweep: mode needs a grid of dimension >= 2");
    u = carleman_mode(grid, static_cast<int>(parse_int(jk[0])), static_cast<int>(parse_int(jk[1])));
  } else {
    throw ConfigError("carleman-sweep: --u must be bump or mode:j,k");
  }
  if (grid.dim() < 3) throw ConfigError("carleman-sweep: needs n >= 3");
  std::vector<CarlemanRatio> out(taus.size());
  parallel_for(static_cast<long>(taus.size()), static_cast<int>(c.get_int("workers", 1)),
               [&](long i) { out[i] = carleman_ratio(u, taus[i]); });
  Table t;
  t.columns = {"tau", "ratio", "num_norm", "den_norm"};
  for (size_t i = 0; i < taus.size(); ++i) {
    if (!std::isfinite(out[i].ratio)) throw NumericalError("carleman-sweep: non-finite ratio");
    t.add({taus[i], out[i].ratio, out[i].num_norm, out[i].den_norm});
  }
  return t;
}

// Oscillatory decay

Table osc_decay_table(const Config& c, std::string* summary) {
  const std::string phase = c.get("phase", "distance");
  const std::vector<double> ladder = c.get_doubles("lambda_ladder", {32, 64, 128, 256});
  const double p = c.get_double("p", 2.0), q = c.get_double("q", 2.0);
  OscKernelSpec spec;
  if (phase == "distance") {
    spec = distance_spec(ladder, c.get_double("side", 0.5), c.get_double("gap", 0.025), c.get_double("plateau", 0.85));
  } else if (phase == "bilinear") {
    spec = bilinear_spec(static_cast<int>(c.get_int("n", 2)), ladder);
  } else {
    throw ConfigError("osc-decay: phase must be distance or bilinear");
  }
  DecayOptions opt;
  opt.points_per_axis = static_cast<int>(c.get_int("points_per_axis", 0));
  opt.workers = static_cast<int>(c.get_int("workers", 1));
  opt.power.seeds = static_cast<int>(c.get_int("seeds", 2));
  opt.power.seed = static_cast<std::uint64_t>(c.get_int("seed", 1));
  const DecayFit fit = decay_fit(spec, p, q, opt);
  Table t;
  t.columns = {"lambda", "norm_lb", "iters"};
  for (const DecayPoint& pt : fit.points) t.add({pt.lambda, pt.norm_lb, static_cast<long long>(pt.iterations)});
  if (summary) {
    std::ostringstream s;
    if (fit.valid)
      s << "slope " << format_double(fit.slope) << " +- " << format_double(fit.half_width) << " (theory "
        << format_double(fit.theoretical_slope) << ")" << (fit.monotone ? "" : ", not monotone");
    else
      s << "no fit: a norm vanished";
    *summary = s.str();
  }
  return t;
}

// Cluster probe

Table cluster_probe_table(const Config& c, std::string* summary) {
  const int n = static_cast<int>(c.get_int("n", 3));
  if (n < 3) throw ConfigError("cluster-probe: n must be >= 3");
  const TorusGrid grid(parse_grid(c.get("grid", "48"), n));
  const int m_max = static_cast<int>(c.get_int("m_max", 12));
  if (m_max < 2) throw ConfigError("cluster-probe: m_max must be >= 2");
  const double p = c.get_double("p", 2.0);
  const double q = c.get_double("q", 2.0 * grid.dim() / (grid.dim() - 2.0));
  PowerIterOptions opt;
  opt.seeds = static_cast<int>(c.get_int("seeds", 2));
  opt.seed = static_cast<std::uint64_t>(c.get_int("seed", 1));
  const ClusterGrowth g = cluster_growth(grid, m_max, p, q, opt, static_cast<int>(c.get_int("workers", 1)));
  Table t;
  t.columns = {"m", "norm_lb", "iters", "converged"};
  for (size_t i = 0; i < g.m.size(); ++i)
    t.add({static_cast<long long>(g.m[i]), g.estimates[i].lower_bound, static_cast<long long>(g.estimates[i].iterations),
           static_cast<long long>(g.estimates[i].converged)});
  if (summary) *summary = "growth exponent " + format_double(g.exponent);
  return t;
}

}  // namespace resolab
