// floquet-crlb: command-line front end for the orbit, bound, simulation and
// estimation stages. Exit status: 0 success, 1 domain error, 2 usage error.

#include "CLI11.hpp"

#include "floquet/crlb.hpp"
#include "floquet/errors.hpp"
#include "floquet/estimate.hpp"
#include "floquet/experiment.hpp"
#include "floquet/orbit.hpp"
#include "floquet/records.hpp"
#include "floquet/stochsim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace floquet;

namespace {

std::string sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct OrbitArgs {
  std::string system;
  std::string params;
  std::vector<double> guess;
  double period = 0.0;
  double tol = 1e-9;
  int grid = kDefaultGrid;
  std::string out;
};

int cmd_orbit(const OrbitArgs& a) {
  const ParamMap params = parse_params(a.params);
  const SystemSpec system = make_system(a.system, params);
  std::vector<double> guess = a.guess;
  double period = a.period;
  default_guess(a.system, params, guess, period);
  if (static_cast<int>(guess.size()) != system.dim()) {
    throw UsageError("--guess needs " + std::to_string(system.dim()) + " components");
  }
  Vec x0(system.dim());
  for (int i = 0; i < system.dim(); ++i) x0[i] = guess[static_cast<std::size_t>(i)];
  const PeriodicOrbit orbit = find_periodic_orbit(system, x0, period, a.tol);
  const OrbitRecord record = make_orbit_record(orbit, nontrivial_modes(orbit, a.grid));

  std::cout << "system " << record.system << " (" << format_params(system.params()) << ")\n";
  std::cout << "period " << sig6(record.tau) << '\n';
  std::cout << "anchor";
  for (Eigen::Index i = 0; i < record.anchor.size(); ++i) std::cout << ' ' << sig6(record.anchor[i]);
  std::cout << '\n';
  std::cout << "trivial multiplier " << sig6(record.multipliers.trivial) << '\n';
  for (std::size_t i = 0; i < record.multipliers.nontrivial.size(); ++i) {
    std::cout << "lambda_" << i + 1 << ' ' << sig6(record.multipliers.nontrivial[i]) << '\n';
  }
  if (!a.out.empty()) write_orbit_record(record, a.out);
  return 0;
}

int cmd_bound(const std::string& orbit_file, long n, int p) {
  const OrbitRecord record = read_orbit_record(orbit_file);
  for (std::size_t m = 0; m < record.modes.size(); ++m) {
    const auto& mode = record.modes[m];
    const auto up = continuum_bound(mode, n);
    std::cout << "mode " << m + 1 << ": lambda " << sig6(mode.lambda()) << "  UP "
              << sig6(up.value) << "  sqrt(UP) " << sig6(std::sqrt(up.value));
    if (p > 0) {
      const auto d = discrete_bound(coefficients_from_mode(mode, p), n);
      std::cout << "  discrete(p=" << p << ") " << sig6(d.value);
    }
    std::cout << '\n';
  }
  return 0;
}

struct SimulateArgs {
  std::string orbit_file;
  int p = 50;
  long n = 100;
  double g = 5e-5;
  double dt = 0.0;
  std::uint64_t seed = 1;
  std::string noise = "gaussian";
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const OrbitRecord record = read_orbit_record(a.orbit_file);
  const PeriodicOrbit orbit = rebuild_orbit(record);
  const SectionSet sections = place_sections(orbit, record.modes, a.p);
  CrossingRun run;
  run.g = a.g;
  run.dt = a.dt;
  run.n_cycles = a.n;
  run.noise = parse_noise_kind(a.noise);
  const CrossingSeries series = simulate_crossings(orbit, sections, run, a.seed);
  std::cout << "crossings " << series.size() << " (discarded: " << series.discarded_out_of_gate
            << " out of gate, " << series.discarded_out_of_order << " out of order)\n";
  write_crossing_series(series, a.out);
  return 0;
}

struct EstimateArgs {
  std::string crossings;
  std::string orbit_file;
  std::string estimator = "matrix";
  bool no_center = false;
  std::string out;
};

int cmd_estimate(const EstimateArgs& a) {
  const CrossingSeries series = read_crossing_series(a.crossings);
  EstimateOptions opt;
  opt.fit.center = !a.no_center;
  opt.mode_projection = parse_estimator(a.estimator) == Estimator::mode_projection;
  SectionSet sections;
  if (!a.orbit_file.empty()) {
    const OrbitRecord record = read_orbit_record(a.orbit_file);
    sections = place_sections(rebuild_orbit(record), record.modes, series.p);
  } else if (opt.mode_projection && series.coord_dim > 1) {
    throw UsageError("--estimator mode_projection needs --orbit-file");
  }
  const ParFit fit = fit_par(series, opt.fit);
  const MultiplierEstimate est = opt.mode_projection && series.coord_dim > 1
                                     ? estimate_multipliers(series, sections, opt)
                                     : multiplier_estimate(fit);
  std::cout << "cycles " << est.n_cycles << ", sigma2_hat " << sig6(fit.sigma2_hat) << '\n';
  for (std::size_t i = 0; i < est.lambda_hat.size(); ++i) {
    std::cout << "lambda_hat_" << i + 1 << ' ' << sig6(est.lambda_hat[i]) << '\n';
  }
  if (est.complex_pair) std::cout << "warning: complex pair, real parts shown\n";
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw UsageError("cannot write " + a.out);
    for (std::size_t i = 0; i < est.lambda_hat.size(); ++i) {
      out << "lambda_hat_" << i + 1 << ' ' << full(est.lambda_hat[i]) << '\n';
    }
    out << "complex_pair " << (est.complex_pair ? 1 : 0) << '\n';
  }
  return 0;
}

int cmd_table1(const std::string& out_dir, std::uint64_t seed, int threads) {
  const Table1Report report = reproduce_table1(out_dir, seed, threads);
  for (const auto& run : report.runs) print_summary(run, std::cout);
  std::ifstream table(std::filesystem::path(out_dir) / "table1.txt");
  std::cout << '\n' << table.rdbuf();
  return 0;
}

int cmd_run(const std::string& config_file, const std::string& out) {
  ExperimentConfig config = load_config(config_file);
  if (!out.empty()) config.output = out;
  print_summary(run_monte_carlo(config), std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cramer-Rao bounds for Floquet multiplier estimation"};
  app.require_subcommand(1);

  OrbitArgs oa;
  auto* orbit = app.add_subcommand("orbit", "locate a periodic orbit and export its modes");
  orbit->add_option("--system", oa.system, "registered system (vdp, lorenz, radial)")->required();
  orbit->add_option("--params", oa.params, "k=v,k=v overrides");
  orbit->add_option("--guess", oa.guess, "initial state")->delimiter(',');
  orbit->add_option("--period", oa.period, "period guess");
  orbit->add_option("--tol", oa.tol, "shooting residual tolerance");
  orbit->add_option("--grid", oa.grid, "mode grid intervals per period");
  orbit->add_option("--out", oa.out, "orbit record file");

  std::string bound_file;
  long bound_n = 100;
  int bound_p = 0;
  auto* bound = app.add_subcommand("bound", "evaluate the uncertainty bound");
  bound->add_option("--orbit-file", bound_file, "orbit record")->required();
  bound->add_option("--n", bound_n, "cycles");
  bound->add_option("--p", bound_p, "also evaluate the discrete bound for p sections");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "simulate a noisy path and record crossings");
  simulate->add_option("--orbit-file", sa.orbit_file, "orbit record")->required();
  simulate->add_option("--p", sa.p, "sections");
  simulate->add_option("--n", sa.n, "cycles");
  simulate->add_option("--g", sa.g, "noise amplitude");
  simulate->add_option("--dt", sa.dt, "Euler-Maruyama step (0: tau/20000)");
  simulate->add_option("--seed", sa.seed, "random seed");
  simulate->add_option("--noise", sa.noise, "gaussian or laplace");
  simulate->add_option("--out", sa.out, "crossing series file")->required();

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "fit the periodic autoregression");
  estimate->add_option("--crossings", ea.crossings, "crossing series file")->required();
  estimate->add_option("--orbit-file", ea.orbit_file, "orbit record (mode projection)");
  estimate->add_option("--estimator", ea.estimator, "matrix or mode_projection");
  estimate->add_flag("--no-center", ea.no_center, "skip per-section centering");
  estimate->add_option("--out", ea.out, "estimates at full precision");

  std::string table_dir;
  std::uint64_t table_seed = kTable1Seed;
  int table_threads = 0;
  auto* table1 = app.add_subcommand("table1", "run both benchmark studies");
  table1->add_option("--out-dir", table_dir, "output directory")->required();
  table1->add_option("--seed", table_seed, "base seed");
  table1->add_option("--threads", table_threads, "worker threads (0: all cores)");

  std::string run_config, run_out;
  auto* run = app.add_subcommand("run", "run a Monte Carlo study from a config file");
  run->add_option("--config", run_config, "key = value config file")->required();
  run->add_option("--out", run_out, "results file (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*orbit) return cmd_orbit(oa);
    if (*bound) return cmd_bound(bound_file, bound_n, bound_p);
    if (*simulate) return cmd_simulate(sa);
    if (*estimate) return cmd_estimate(ea);
    if (*table1) return cmd_table1(table_dir, table_seed, table_threads);
    if (*run) return cmd_run(run_config, run_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
