#pragma once

// Experiment plumbing: flat key=value configs, result tables with
// deterministic CSV output, and the sweeps behind the command-line driver.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "resolab/common.hpp"
#include "resolab/opnorm.hpp"

namespace resolab {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// key = value per line; '#' starts a comment; later keys override earlier ones.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;
  Complex get_complex(const std::string& key, Complex fallback) const;
  std::vector<Complex> get_complexes(const std::string& key, const std::vector<Complex>& fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

double parse_double(std::string_view text);
long parse_int(std::string_view text);
/// "re", "re:im" or "re+imi" / "re-imi".
Complex parse_complex(std::string_view text);
/// "48" or "48x48x48" (also "48,48,48").
std::vector<int> parse_grid(std::string_view text, int default_dim);

using Cell = std::variant<long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);
/// Header row plus one line per row, LF endings. DomainError on an empty table.
std::string format_csv(const Table& table);
/// Writes format_csv(table); IoError if the path cannot be written.
void emit_csv(const Table& table, const std::string& path);

// Resolvent sweep on T^n

struct ResolventSweepConfig {
  int n = 3;
  int samples = 48;
  double delta = 0.5;
  double z_max = 400.0;
  int points = 60;
  double p = 0.0;  // 0: 2n/(n+2)
  double q = 0.0;  // 0: 2n/(n-2)
  bool exterior = true;
  double exterior_lambda = 100.0;
  double exterior_eta = 0.01;
  int seeds = 2;
  int max_iters = 500;
  std::uint64_t seed = 1;
  int workers = 1;

  static ResolventSweepConfig from(const Config& config);
};

/// Rays arg z in {0, +-pi/4, +-pi/2, +-3pi/4} at geometric radii up to z_max,
/// then points with Re sqrt z just above delta alternating in the sign of Im z.
/// All points lie in Xi_delta.
std::vector<Complex> resolvent_z_grid(double delta, double z_max, int points);

struct ResolventRow {
  Complex z;
  bool in_region = false;
  bool singular = false;
  NormEstimate estimate;   // p -> q, empty when singular
  double l2_exact = 0.0;   // 1 / min_k ||k|^2 + z| by lattice scan
  double l2_bound = 0.0;   // |z|^{-1/2} (Re sqrt z)^{-1}
  std::vector<int> witness;  // minimizing k
};

struct ResolventSweep {
  double p = 0.0, q = 0.0;
  std::vector<ResolventRow> rows;
  double region_max = 0.0, region_min = 0.0;
  double exterior_lower_bound = 0.0;  // 0 without an exterior probe
};

ResolventSweep run_resolvent_sweep(const ResolventSweepConfig& config);
Table resolvent_table(const ResolventSweep& sweep);

// Command-line experiments; each reads its keys from config and returns the CSV table.
// Global keys: seed, workers.

Table bessel_check_table(const Config& config);
/// Kernel table; the residual diagnostics go to *diagnostics.
Table parametrix_build_table(const Config& config, Table* diagnostics);
Table carleman_sweep_table(const Config& config);
/// Also reports the fitted slope through *summary when non-null.
Table osc_decay_table(const Config& config, std::string* summary = nullptr);
Table cluster_probe_table(const Config& config, std::string* summary = nullptr);

}  // namespace resolab
