#include "floquet/experiment.hpp"

#include "floquet/crlb.hpp"
#include "floquet/errors.hpp"
#include "floquet/estimate.hpp"
#include "floquet/orbit.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace floquet {

Estimator parse_estimator(std::string_view text) {
  if (text == "matrix") return Estimator::matrix;
  if (text == "mode_projection") return Estimator::mode_projection;
  throw UsageError("unknown estimator '" + std::string(text) + "' (matrix|mode_projection)");
}

std::string_view estimator_name(Estimator e) noexcept {
  return e == Estimator::matrix ? "matrix" : "mode_projection";
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("bad value for '" + std::string(key) + "': '" + std::string(text) + "'");
  }
  return v;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<double>(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "system") {
      c.system = std::string(value);
    } else if (key == "params") {
      c.params = parse_params(value);
    } else if (key == "guess") {
      c.guess = parse_list(key, value);
    } else if (key == "period") {
      c.period = parse_number<double>(key, value);
    } else if (key == "sections") {
      c.sections = parse_number<int>(key, value);
    } else if (key == "cycles") {
      c.cycles = parse_number<long>(key, value);
    } else if (key == "g") {
      c.g = parse_number<double>(key, value);
    } else if (key == "dt") {
      c.dt = parse_number<double>(key, value);
    } else if (key == "steps_per_period") {
      c.steps_per_period = parse_number<int>(key, value);
    } else if (key == "realizations") {
      c.realizations = parse_number<int>(key, value);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "noise") {
      c.noise = parse_noise_kind(value);
    } else if (key == "estimator") {
      c.estimator = parse_estimator(value);
    } else if (key == "burn_in") {
      c.burn_in = parse_number<long>(key, value);
    } else if (key == "threads") {
      c.threads = parse_number<int>(key, value);
    } else if (key == "output") {
      c.output = std::string(value);
    } else {
      throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" +
                       std::string(key) + "'");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "system = " << c.system << '\n';
  os << "params = " << format_params(c.params) << '\n';
  os << "guess = ";
  for (std::size_t i = 0; i < c.guess.size(); ++i) os << (i ? "," : "") << num(c.guess[i]);
  os << '\n';
  os << "period = " << num(c.period) << '\n';
  os << "sections = " << c.sections << '\n';
  os << "cycles = " << c.cycles << '\n';
  os << "g = " << num(c.g) << '\n';
  os << "dt = " << num(c.dt) << '\n';
  os << "steps_per_period = " << c.steps_per_period << '\n';
  os << "realizations = " << c.realizations << '\n';
  os << "seed = " << c.seed << '\n';
  os << "noise = " << noise_kind_name(c.noise) << '\n';
  os << "estimator = " << estimator_name(c.estimator) << '\n';
  os << "burn_in = " << c.burn_in << '\n';
  os << "threads = " << c.threads << '\n';
  os << "output = " << c.output << '\n';
  return os.str();
}

void default_guess(const std::string& system, const ParamMap& params, std::vector<double>& guess,
                   double& period) {
  if (system == "vdp") {
    if (guess.empty()) guess = {2.0, 0.0};
    if (period <= 0) period = 2.0;
  } else if (system == "lorenz") {
    if (guess.empty()) guess = {10.0, 10.0, 200.0};
    if (period <= 0) period = 0.5;
  } else if (system == "radial") {
    if (guess.empty()) guess = {1.0, 0.0};
    if (period <= 0) {
      const auto it = params.find("omega");
      period = 2.0 * std::numbers::pi / (it == params.end() ? 1.0 : it->second);
    }
  }
  if (guess.empty() || period <= 0) {
    throw UsageError("system '" + system + "' needs an explicit guess and period");
  }
}

namespace {

void validate(const ExperimentConfig& c) {
  if (c.realizations < 1) throw UsageError("realizations must be at least 1");
  if (c.sections < 1) throw UsageError("sections must be at least 1");
  if (c.cycles < 2) throw UsageError("cycles must be at least 2");
  if (c.g < 0) throw UsageError("g must be non-negative");
  if (c.dt < 0) throw UsageError("dt must be non-negative");
  if (c.steps_per_period < 1) throw UsageError("steps_per_period must be positive");
  if (c.burn_in < 0) throw UsageError("burn_in must be non-negative");
  if (c.threads < 0) throw UsageError("threads must be non-negative");
}

}  // namespace

ExperimentResult run_monte_carlo(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate(config);
  ExperimentResult result;
  result.config = config;

  const SystemSpec system = make_system(config.system, config.params);
  std::vector<double> guess_list = config.guess;
  double period = config.period;
  default_guess(config.system, config.params, guess_list, period);
  if (static_cast<int>(guess_list.size()) != system.dim()) {
    throw UsageError("guess has " + std::to_string(guess_list.size()) + " components, system has " +
                     std::to_string(system.dim()));
  }
  Vec guess(system.dim());
  for (int i = 0; i < system.dim(); ++i) guess[i] = guess_list[static_cast<std::size_t>(i)];

  const PeriodicOrbit orbit = find_periodic_orbit(system, guess, period);
  const std::vector<FloquetMode> modes = nontrivial_modes(orbit);
  const SectionSet sections = place_sections(orbit, modes, config.sections);
  result.tau = orbit.tau;
  for (const auto& m : modes) {
    ModeSummary s;
    s.lambda = m.lambda();
    s.sqrt_up = std::sqrt(continuum_bound(m, config.cycles).value);
    result.modes.push_back(s);
  }

  CrossingRun run;
  run.g = config.g;
  run.dt = config.dt > 0 ? config.dt : orbit.tau / config.steps_per_period;
  run.n_cycles = config.cycles + config.burn_in;
  run.noise = config.noise;
  EstimateOptions est_opt;
  est_opt.mode_projection = config.estimator == Estimator::mode_projection;

  const int r_total = config.realizations;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(r_total));
  for (int r = 0; r < r_total; ++r) seeds[static_cast<std::size_t>(r)] = config.seed + r;
  result.realizations.resize(seeds.size());

  int threads = config.threads > 0 ? config.threads
                                   : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, r_total);
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(threads));
  const long drop = config.burn_in * config.sections;

  auto work = [&](int t) {
    try {
      const auto lo = static_cast<std::size_t>(r_total) * t / threads;
      const auto hi = static_cast<std::size_t>(r_total) * (t + 1) / threads;
      const auto lanes = simulate_crossings_ensemble(
          orbit, sections, run, std::span<const std::uint64_t>(seeds.data() + lo, hi - lo));
      for (std::size_t l = 0; l < lanes.size(); ++l) {
        Realization& rz = result.realizations[lo + l];
        rz.index = static_cast<int>(lo + l);
        rz.seed = seeds[lo + l];
        if (lanes[l].error) {
          try {
            std::rethrow_exception(lanes[l].error);
          } catch (const TrajectoryEscape& e) {
            rz.excluded = "escape";
          } catch (const CrossingSequence& e) {
            rz.excluded = "cycle-slip";
          }
          continue;
        }
        CrossingSeries series = lanes[l].series;
        series.records.erase(series.records.begin(), series.records.begin() + drop);
        const auto est = estimate_multipliers(series, sections, est_opt);
        rz.lambda_hat = est.lambda_hat;
        rz.complex_pair = est.complex_pair;
      }
    } catch (...) {
      failures[static_cast<std::size_t>(t)] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  for (const auto& rz : result.realizations) {
    if (!rz.excluded.empty()) {
      ++result.excluded;
      continue;
    }
    ++result.included;
    if (rz.complex_pair) ++result.flagged_complex;
  }
  if (result.excluded * 10 > r_total) {
    throw ExperimentIntegrity(std::to_string(result.excluded) + " of " + std::to_string(r_total) +
                              " realizations excluded (limit 10%)");
  }
  for (std::size_t m = 0; m < result.modes.size(); ++m) {
    double sum = 0.0;
    for (const auto& rz : result.realizations) {
      if (rz.excluded.empty()) sum += rz.lambda_hat[m];
    }
    const double mean = sum / result.included;
    double ss = 0.0;
    for (const auto& rz : result.realizations) {
      if (rz.excluded.empty()) ss += (rz.lambda_hat[m] - mean) * (rz.lambda_hat[m] - mean);
    }
    result.modes[m].mean = mean;
    result.modes[m].std = result.included >= 2 ? std::sqrt(ss / (result.included - 1))
                                               : std::numeric_limits<double>::quiet_NaN();
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!config.output.empty()) write_result(result, config.output);
  return result;
}

void write_result(const ExperimentResult& result, std::ostream& out) {
  std::istringstream cfg(format_config(result.config));
  for (std::string line; std::getline(cfg, line);) out << "# " << line << '\n';
  out << "# tau = " << num(result.tau) << '\n';
  out << "realization,seed,status";
  for (std::size_t m = 0; m < result.modes.size(); ++m) out << ",lambda_hat_" << m + 1;
  out << ",complex\n";
  for (const auto& rz : result.realizations) {
    out << rz.index << ',' << rz.seed << ',' << (rz.excluded.empty() ? "ok" : rz.excluded);
    for (std::size_t m = 0; m < result.modes.size(); ++m) {
      out << ',' << (rz.excluded.empty() ? num(rz.lambda_hat[m]) : "nan");
    }
    out << ',' << (rz.complex_pair ? 1 : 0) << '\n';
  }
  out << "\nsummary,mode,lambda,sqrt_up,mean,std,included,excluded,flagged_complex\n";
  for (std::size_t m = 0; m < result.modes.size(); ++m) {
    const auto& s = result.modes[m];
    out << "summary," << m + 1 << ',' << num(s.lambda) << ',' << num(s.sqrt_up) << ','
        << num(s.mean) << ',' << (result.std_defined() ? num(s.std) : "undefined") << ','
        << result.included << ',' << result.excluded << ',' << result.flagged_complex << '\n';
  }
}

void write_result(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  write_result(result, out);
}

void print_summary(const ExperimentResult& result, std::ostream& out) {
  const auto& c = result.config;
  out << c.system << " (" << format_params(make_system(c.system, c.params).params())
      << "), tau = " << short_num(result.tau) << '\n';
  out << "  p = " << c.sections << ", n = " << c.cycles << ", g = " << short_num(c.g)
      << ", R = " << c.realizations << ", estimator = " << estimator_name(c.estimator) << '\n';
  out << "  included " << result.included << ", excluded " << result.excluded
      << ", complex-flagged " << result.flagged_complex << '\n';
  for (std::size_t m = 0; m < result.modes.size(); ++m) {
    const auto& s = result.modes[m];
    out << "  mode " << m + 1 << ": lambda = " << short_num(s.lambda)
        << ", sqrt(UP) = " << short_num(s.sqrt_up) << ", mean(lambda_hat) = " << short_num(s.mean)
        << ", std(lambda_hat) = " << (result.std_defined() ? short_num(s.std) : "undefined")
        << '\n';
  }
  out << "  wall clock " << short_num(result.wall_seconds) << " s\n";
}

bool Table1Report::pass() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const Table1Row& r) { return r.mean_ok && r.std_ok && r.bound_ok; });
}

ExperimentConfig table1_vdp_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.system = "vdp";
  c.params = {{"eps", 0.1}, {"a", 0.99}};
  c.sections = 50;
  c.cycles = 100;
  c.g = 5e-5;
  c.steps_per_period = kTable1StepsPerPeriod;
  c.realizations = 100;
  c.seed = seed;
  return c;
}

ExperimentConfig table1_lorenz_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.system = "lorenz";
  c.params = {{"sigma", 10.0}, {"r", 240.0}, {"b", 8.0 / 3.0}};
  c.sections = 50;
  c.cycles = 100;
  c.g = 3e-2;
  c.steps_per_period = kTable1StepsPerPeriod;
  c.realizations = 100;
  c.seed = seed;
  return c;
}

namespace {

struct Window {
  double lo, hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

Table1Row make_row(const ExperimentResult& r, int mode, const Window* mean, const Window* std) {
  const auto& s = r.modes[static_cast<std::size_t>(mode - 1)];
  Table1Row row;
  row.system = r.config.system;
  row.mode = mode;
  row.lambda = s.lambda;
  row.sqrt_up = s.sqrt_up;
  row.mean = s.mean;
  row.std = s.std;
  row.mean_ok = mean == nullptr || mean->contains(s.mean);
  row.std_ok = std == nullptr || std->contains(s.std);
  row.bound_ok = s.std >= 0.8 * s.sqrt_up;
  return row;
}

}  // namespace

Table1Report reproduce_table1(const std::filesystem::path& out_dir, std::uint64_t seed,
                              int threads) {
  std::filesystem::create_directories(out_dir);
  Table1Report report;
  auto vdp = table1_vdp_config(seed);
  auto lorenz = table1_lorenz_config(seed);
  vdp.threads = lorenz.threads = threads;
  // Files echo the config, so they carry names relative to out_dir only.
  for (auto* c : {&vdp, &lorenz}) {
    auto run = run_monte_carlo(*c);
    run.config.output = "table1_" + c->system + "_realizations.csv";
    write_result(run, out_dir / run.config.output);
    report.runs.push_back(std::move(run));
  }

  static constexpr Window vdp_mean{0.37, 0.42}, vdp_std{0.043, 0.068};
  static constexpr Window l1_mean{-0.67, -0.56}, l1_std{0.055, 0.095}, l2_std{0.0007, 0.0021};
  report.rows.push_back(make_row(report.runs[0], 1, &vdp_mean, &vdp_std));
  report.rows.push_back(make_row(report.runs[1], 1, &l1_mean, &l1_std));
  report.rows.push_back(make_row(report.runs[1], 2, nullptr, &l2_std));

  std::ofstream csv(out_dir / "table1.csv");
  csv << "system,mode,lambda,sqrt_up,mean_lambda_hat,std_lambda_hat,mean_ok,std_ok,bound_ok\n";
  for (const auto& r : report.rows) {
    csv << r.system << ',' << r.mode << ',' << num(r.lambda) << ',' << num(r.sqrt_up) << ','
        << num(r.mean) << ',' << num(r.std) << ',' << r.mean_ok << ',' << r.std_ok << ','
        << r.bound_ok << '\n';
  }
  std::ofstream txt(out_dir / "table1.txt");
  txt << "seed " << seed << ", R = 100, p = 50, n = 100\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %4s %10s %10s %14s %14s  %s\n", "system", "mode",
                "lambda", "sqrt(UP)", "mean(l_hat)", "std(l_hat)", "check");
  txt << line;
  for (const auto& r : report.rows) {
    const bool ok = r.mean_ok && r.std_ok && r.bound_ok;
    std::snprintf(line, sizeof line, "%-8s %4d %10.4g %10.4g %14.4g %14.4g  %s\n",
                  r.system.c_str(), r.mode, r.lambda, r.sqrt_up, r.mean, r.std,
                  ok ? "pass" : "FAIL");
    txt << line;
  }
  txt << '\n' << (report.pass() ? "all rows within tolerance" : "some rows out of tolerance")
      << '\n';
  return report;
}

}  // namespace floquet
