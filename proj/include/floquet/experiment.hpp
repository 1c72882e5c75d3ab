#pragma once

#include "floquet/dynsys.hpp"
#include "floquet/stochsim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace floquet {

enum class Estimator { matrix, mode_projection };

Estimator parse_estimator(std::string_view text);
std::string_view estimator_name(Estimator e) noexcept;

/// One Monte Carlo study. Keys of the config file match the field names.
struct ExperimentConfig {
  std::string system = "vdp";
  ParamMap params;
  /// Initial guess for the orbit search; empty selects the system default.
  std::vector<double> guess;
  /// Guessed period; 0 selects the system default.
  double period = 0.0;
  int sections = 50;
  long cycles = 100;
  double g = 5e-5;
  /// Euler-Maruyama step; 0 selects tau / steps_per_period.
  double dt = 0.0;
  int steps_per_period = 20000;
  int realizations = 100;
  std::uint64_t seed = 1;
  NoiseKind noise = NoiseKind::gaussian;
  Estimator estimator = Estimator::matrix;
  /// Extra leading revolutions simulated and discarded.
  long burn_in = 0;
  /// 0 uses the hardware concurrency. Results do not depend on it.
  int threads = 0;
  /// Per-realization results file; empty disables file output.
  std::string output;
};

/// Parses flat `key = value` text ('#' starts a comment). Unknown or
/// malformed keys raise UsageError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& config);

/// Default orbit guess and period for the registered benchmarks.
void default_guess(const std::string& system, const ParamMap& params, std::vector<double>& guess,
                   double& period);

struct Realization {
  int index = 0;
  std::uint64_t seed = 0;
  /// Empty if included; otherwise the exclusion reason.
  std::string excluded;
  std::vector<double> lambda_hat;
  bool complex_pair = false;
};

struct ModeSummary {
  double lambda = 0.0;
  double sqrt_up = 0.0;
  double mean = 0.0;
  /// Sample standard deviation (divisor R - 1); NaN with fewer than 2.
  double std = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  double tau = 0.0;
  std::vector<Realization> realizations;
  std::vector<ModeSummary> modes;
  int included = 0;
  int excluded = 0;
  int flagged_complex = 0;
  /// Not written to result files, which stay reproducible.
  double wall_seconds = 0.0;

  bool std_defined() const noexcept { return included >= 2; }
};

/// Runs config.realizations independent realizations with seeds
/// seed + r. Escapes and cycle slips exclude a realization; more than 10%
/// exclusions raise ExperimentIntegrity.
ExperimentResult run_monte_carlo(const ExperimentConfig& config);

/// Delimited text: config echo as comment lines, one row per realization,
/// then summary rows.
void write_result(const ExperimentResult& result, std::ostream& out);
void write_result(const ExperimentResult& result, const std::filesystem::path& path);
/// Human-readable summary (6 significant digits).
void print_summary(const ExperimentResult& result, std::ostream& out);

struct Table1Row {
  std::string system;
  int mode = 1;
  double lambda = 0.0;
  double sqrt_up = 0.0;
  double mean = 0.0;
  double std = 0.0;
  bool mean_ok = true;
  bool std_ok = true;
  bool bound_ok = true;
};

struct Table1Report {
  std::vector<ExperimentResult> runs;
  std::vector<Table1Row> rows;
  bool pass() const;
};

/// Benchmark configurations of the validation table.
ExperimentConfig table1_vdp_config(std::uint64_t seed);
ExperimentConfig table1_lorenz_config(std::uint64_t seed);
inline constexpr std::uint64_t kTable1Seed = 20160901;
/// Finer than the library default: at tau / 20000 the Euler-Maruyama cycle's
/// multiplier is off by about 1% (van der Pol) and 2% (Lorenz).
inline constexpr int kTable1StepsPerPeriod = 80000;

/// Runs both benchmarks and writes table1.csv, table1.txt and one
/// per-realization file per benchmark into `out_dir`.
Table1Report reproduce_table1(const std::filesystem::path& out_dir,
                              std::uint64_t seed = kTable1Seed, int threads = 0);

}  // namespace floquet
