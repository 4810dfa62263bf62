// resolab: command-line driver for the sweeps in resolab/experiments.hpp.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <iostream>
#include <memory>

#include "resolab/experiments.hpp"

using namespace resolab;

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericExit = 3;

struct Override {
  CLI::Option* option;
  std::string key;
  std::unique_ptr<std::string> value;
};

class Overrides {
 public:
  void add(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_unique<std::string>();
    CLI::Option* opt = sub->add_option(flag, *value, help);
    entries_.push_back({opt, key, std::move(value)});
  }
  void apply(Config& config) const {
    for (const auto& e : entries_)
      if (e.option->count() > 0) config.set(e.key, *e.value);
  }

 private:
  std::vector<Override> entries_;
};

void write_table(const Table& table, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << format_csv(table);
  else
    emit_csv(table, out);
}

// k.csv -> k.residual.csv
std::string sibling_path(const std::string& out, const std::string& tag) {
  const size_t slash = out.find_last_of('/');
  const size_t dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + "." + tag + ".csv";
  return out.substr(0, dot) + "." + tag + out.substr(dot);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"resolab: resolvent, parametrix, Carleman and oscillatory-decay experiments"};
  app.require_subcommand(1);
  std::string config_path, out, seed_text, workers_text;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "flat key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed_text, "64-bit seed");
  app.add_option("--workers", workers_text, "worker threads");
  app.add_option("--out", out, "CSV output path (stdout when absent)");
  app.add_option("--set", sets, "extra key=value override, repeatable");

  // global flags are accepted after the subcommand too
  auto make_sub = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    return sub;
  };

  Overrides resolvent, bessel, parametrix, carleman, osc, cluster;
  CLI::App* s_res = make_sub("resolvent-sweep", "uniform resolvent bounds on T^n over a z-grid in Xi_delta");
  resolvent.add(s_res, "--n", "n", "torus dimension (>= 3)");
  resolvent.add(s_res, "-N,--samples", "N", "grid points per axis");
  resolvent.add(s_res, "--delta", "delta", "region parameter in (0, 1)");
  resolvent.add(s_res, "--z-max", "z_max", "largest |z|");
  resolvent.add(s_res, "--points", "points", "z-grid size");
  resolvent.add(s_res, "--p", "p", "domain exponent (default 2n/(n+2))");
  resolvent.add(s_res, "--q", "q", "target exponent (default 2n/(n-2))");
  resolvent.add(s_res, "--exterior", "exterior", "append the probe z = -lambda_k + 0.01i (true/false)");

  CLI::App* s_bes = make_sub("bessel-check", "tabulate F_nu(r, z) with error estimates");
  bessel.add(s_bes, "--n", "n", "dimensions, comma separated");
  bessel.add(s_bes, "--nu-max", "nu_max", "largest order");
  bessel.add(s_bes, "--r-list", "r_list", "radii, comma separated");
  bessel.add(s_bes, "--z-list", "z_list", "spectral parameters re:im, comma separated");

  CLI::App* s_par = make_sub("parametrix-build", "Hadamard parametrix kernel on a coordinate chart");
  parametrix.add(s_par, "--metric", "metric", "flat | sphere | file");
  parametrix.add(s_par, "--metric-file", "metric_file", "key=value metric file (with --metric file)");
  parametrix.add(s_par, "--n", "n", "chart dimension");
  parametrix.add(s_par, "--N-order", "N_order", "number of transport terms minus one");
  parametrix.add(s_par, "--z", "z", "spectral parameter re:im");
  parametrix.add(s_par, "--grid", "grid", "chart points per axis");
  parametrix.add(s_par, "--rho", "rho", "cutoff radius");

  CLI::App* s_car = make_sub("carleman-sweep", "weighted Carleman ratios over a tau list");
  carleman.add(s_car, "--tau-list", "tau_list", "tau values, comma separated");
  carleman.add(s_car, "--grid", "grid", "N1xN2xN3");
  carleman.add(s_car, "--u", "u", "bump | mode:j,k");

  CLI::App* s_osc = make_sub("osc-decay", "decay of oscillatory integral operators along a lambda ladder");
  osc.add(s_osc, "--phase", "phase", "distance | bilinear");
  osc.add(s_osc, "--p", "p", "domain exponent");
  osc.add(s_osc, "--q", "q", "target exponent");
  osc.add(s_osc, "--lambda-ladder", "lambda_ladder", "increasing lambdas, comma separated");

  CLI::App* s_clu = make_sub("cluster-probe", "growth of spectral cluster norms on T^n");
  cluster.add(s_clu, "--grid", "grid", "N or N1xN2xN3");
  cluster.add(s_clu, "--m-max", "m_max", "largest cluster index");
  cluster.add(s_clu, "--p", "p", "domain exponent");
  cluster.add(s_clu, "--q", "q", "target exponent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    Config config = config_path.empty() ? Config{} : Config::load(config_path);
    if (!seed_text.empty()) config.set("seed", seed_text);
    if (!workers_text.empty()) config.set("workers", workers_text);
    for (const std::string& s : sets) {
      const size_t eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      config.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (config.get_int("workers", 1) < 1) throw ConfigError("workers must be >= 1");
    parse_int(config.get("seed", "1"));

    std::string summary;
    if (s_res->parsed()) {
      resolvent.apply(config);
      const ResolventSweep sweep = run_resolvent_sweep(ResolventSweepConfig::from(config));
      write_table(resolvent_table(sweep), out);
      std::cerr << "region max " << format_double(sweep.region_max) << ", min " << format_double(sweep.region_min)
                << ", exterior " << format_double(sweep.exterior_lower_bound) << "\n";
    } else if (s_bes->parsed()) {
      bessel.apply(config);
      write_table(bessel_check_table(config), out);
    } else if (s_par->parsed()) {
      parametrix.apply(config);
      Table diag;
      const Table kernel = parametrix_build_table(config, &diag);
      write_table(kernel, out);
      if (out.empty() || out == "-") {
        std::cout << "\n";
        write_table(diag, out);
      } else {
        emit_csv(diag, sibling_path(out, "residual"));
      }
    } else if (s_car->parsed()) {
      carleman.apply(config);
      write_table(carleman_sweep_table(config), out);
    } else if (s_osc->parsed()) {
      osc.apply(config);
      write_table(osc_decay_table(config, &summary), out);
    } else if (s_clu->parsed()) {
      cluster.apply(config);
      write_table(cluster_probe_table(config, &summary), out);
    }
    if (!summary.empty()) std::cerr << summary << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const BoundaryError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericExit;
  }
}
