// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include "floquet/crlb.hpp"
#include "floquet/estimate.hpp"
#include "floquet/experiment.hpp"
#include "floquet/orbit.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

using namespace floquet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};
Outcome outcomes[12];

void report(int id, bool ok, const std::string& detail) {
  outcomes[id] = {ok, detail};
  std::fprintf(stderr, "criterion %d done\n", id);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }
bool rel_within(double v, double target, double tol) {
  return std::abs(v - target) <= tol * std::abs(target);
}

const PeriodicOrbit& vdp() {
  static const PeriodicOrbit o = find_periodic_orbit(
      make_system("vdp", {{"eps", 0.1}, {"a", 0.99}}), (Vec(2) << 2.0, 0.0).finished(), 2.0);
  return o;
}

const PeriodicOrbit& lorenz() {
  static const PeriodicOrbit o =
      find_periodic_orbit(make_system("lorenz", {{"sigma", 10.0}, {"r", 240.0}, {"b", 8.0 / 3.0}}),
                          (Vec(3) << 10.0, 10.0, 200.0).finished(), 0.5);
  return o;
}

FloquetMode exponential_mode(double lambda, double tau, int n_grid) {
  std::vector<double> log_abs(static_cast<std::size_t>(n_grid) + 1);
  std::vector<std::int8_t> sign(log_abs.size(), 1);
  for (int j = 0; j <= n_grid; ++j) log_abs[j] = std::log(std::abs(lambda)) * j / n_grid;
  Vec e(1);
  e[0] = 1.0;
  return FloquetMode(lambda, e, tau, n_grid, 1, 1, std::move(log_abs), std::move(sign), {});
}

void criterion1() {
  const auto mv = floquet_multipliers(vdp());
  const auto ml = floquet_multipliers(lorenz());
  const bool ok = within(mv.nontrivial[0], 0.3854, 0.001) &&
                  within(ml.nontrivial[0], -0.6162, 0.001) &&
                  within(ml.nontrivial[1], -0.0026, 0.0002);
  report(1, ok,
         fmt("vdp %.6g; lorenz %.6g, %.6g", mv.nontrivial[0], ml.nontrivial[0],
             ml.nontrivial[1]));
}

void criterion2() {
  bool ok = true;
  std::string detail;
  for (const PeriodicOrbit* o : {&vdp(), &lorenz()}) {
    const auto m = floquet_multipliers(*o);
    double logsum = std::log(std::abs(m.trivial));
    for (double l : m.nontrivial) logsum += std::log(std::abs(l));
    const double rel = std::abs(logsum - o->trace_integral) / std::abs(o->trace_integral);
    ok = ok && within(m.trivial, 1.0, 1e-6) && rel <= 1e-6;
    detail += o->system.name() + fmt(" |trivial-1| %.2e, trace rel err %.2e; ",
                                     std::abs(m.trivial - 1.0), rel);
  }
  report(2, ok, detail);
}

void criterion3() {
  const auto mv = nontrivial_modes(vdp());
  const auto ml = nontrivial_modes(lorenz());
  const double v = std::sqrt(continuum_bound(mv[0], 100).value);
  const double l1 = std::sqrt(continuum_bound(ml[0], 100).value);
  const double l2 = std::sqrt(continuum_bound(ml[1], 100).value);
  const bool ok = rel_within(v, 0.0532, 0.02) && rel_within(l1, 0.0606, 0.05) &&
                  rel_within(l2, 0.0009, 0.05);
  report(3, ok, fmt("sqrt(UP): vdp %.6g; lorenz %.6g, %.6g", v, l1, l2));
}

void criterion4() {
  bool ok = true;
  double worst = 0;
  for (double lambda : {0.1, 0.5, 0.9}) {
    const double got = continuum_bound(exponential_mode(lambda, 1.0, kDefaultGrid), 1).value;
    const double want = 2 * lambda * lambda * std::log(1 / lambda);
    const double rel = std::abs(got / want - 1);
    worst = std::max(worst, rel);
    ok = ok && rel <= 1e-8;
  }
  report(4, ok, fmt("max relative error %.2e", worst));
}

void criterion5() {
  bool ok = true;
  double worst_p1 = 0;
  for (double lambda : {0.1, 0.5, 0.9}) {
    const double got = discrete_bound(ParCoefficients{{lambda}, 1.0}, 1).value;
    worst_p1 = std::max(worst_p1, std::abs(got - (1 - lambda * lambda)));
    ok = ok && got == 1 - lambda * lambda;
  }
  double worst_eq = 0, worst_conv = 0;
  for (double lambda : {0.1, 0.5, 0.9}) {
    for (int p : {2, 7, 50, 1250}) {
      const double a = std::pow(lambda, 1.0 / p);
      const double got = discrete_bound(ParCoefficients{std::vector<double>(p, a), 1.0}, 1).value;
      const double want = lambda * lambda * p * (std::pow(lambda, -2.0 / p) - 1);
      worst_eq = std::max(worst_eq, std::abs(got / want - 1));
      if (p == 1250) {
        const double cont = 2 * lambda * lambda * std::log(1 / lambda);
        worst_conv = std::max(worst_conv, std::abs(got / cont - 1));
      }
    }
  }
  ok = ok && worst_eq <= 1e-10 && worst_conv < 0.01;
  report(5, ok,
         fmt("p=1 max |err| %.1e; equal-alpha max rel err %.1e; p=1250 vs continuum %.2e",
             worst_p1, worst_eq, worst_conv));
}

// Returns std(lambda_hat) of the van der Pol study for criteria 8 and 9.
double criteria6to7_11(const fs::path& work) {
  const fs::path a = work / "table1_a";
  const fs::path b = work / "table1_b";
  const auto ra = reproduce_table1(a);
  std::string d6, d7;
  bool ok6 = true, ok7 = true;
  for (const auto& row : ra.rows) {
    ok6 = ok6 && row.mean_ok && row.std_ok;
    ok7 = ok7 && row.bound_ok;
    d6 += row.system + " " + std::to_string(row.mode) +
          fmt(" mean %.4g std %.4g; ", row.mean, row.std);
    d7 += row.system + " " + std::to_string(row.mode) +
          fmt(" std/sqrt(UP) %.3g; ", row.std / row.sqrt_up);
  }
  report(6, ok6, d6);
  report(7, ok7, d7);

  reproduce_table1(b);
  bool same = true;
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(b / entry.path().filename(), std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    same = same && fb.good() && sa.str() == sb.str();
    ++files;
  }
  report(11, same && files == 4, std::to_string(files) + " files compared byte for byte");
  return ra.runs[0].modes[0].std;
}

void criterion8(double std100) {
  const auto mode = nontrivial_modes(vdp())[0];
  const double b1 = continuum_bound(mode, 1).value;
  const double b10 = continuum_bound(mode, 10).value;
  const double b100 = continuum_bound(mode, 100).value;
  const bool ratio_ok =
      std::abs(b1 / b10 - 10) <= 1e-12 * 10 && std::abs(b1 / b100 - 100) <= 1e-12 * 100;

  auto c400 = table1_vdp_config(kTable1Seed);
  c400.cycles = 400;
  const double ratio = run_monte_carlo(c400).modes[0].std / std100;
  const bool ok = ratio_ok && ratio >= 0.5 * 0.75 && ratio <= 0.5 * 1.25;
  report(8, ok,
         fmt("bound ratios %.15g, %.15g; std(n=400)/std(n=100) = %.4g", b1 / b10, b1 / b100,
             ratio));
}

void criterion9(double s_lo) {
  auto hi = table1_vdp_config(kTable1Seed);
  hi.g = 2e-4;
  const double s_hi = run_monte_carlo(hi).modes[0].std;
  const double ratio = s_lo / s_hi;
  report(9, ratio >= 0.7 && ratio <= 1.4,
         fmt("std(g=5e-5) %.4g, std(g=2e-4) %.4g, ratio %.4g", s_lo, s_hi, ratio));
}

void criterion10() {
  const ParCoefficients coeffs{{0.5, 0.8}, 1.0};
  // The fit uses the first 1e5 cycles. The return variance is measured over
  // 1e6, where its sampling error (~0.15%) is well inside the 1% tolerance.
  const long fit_cycles = 100000;
  const long cycles = 1000000;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> eps(0.0, 1.0);
  CrossingSeries s;
  s.p = 2;
  s.coord_dim = 1;
  // Start from the stationary law of section 0.
  double x = std::sqrt(asymptotic_return_variance(coeffs, 0)) * eps(rng);
  for (long i = 1; i <= 2 * cycles; ++i) {
    const int k = static_cast<int>(i % 2);
    x = coeffs.alphas[k == 0 ? 1 : 0] * x + eps(rng);
    CrossingRecord r;
    r.index = i;
    r.section = k;
    r.time = static_cast<double>(i);
    r.coords[0] = x;
    s.records.push_back(r);
  }
  CrossingSeries head = s;
  head.records.resize(static_cast<std::size_t>(2 * fit_cycles));
  const ParFit fit = fit_par(head, {.center = false});
  bool ok = true;
  std::string detail;
  for (int k = 1; k <= 2; ++k) {
    // Regressor of the transition into section k sits on section k - 1.
    double sxx = 0;
    for (std::size_t i = 1; i < head.records.size(); ++i) {
      if (head.records[i].section == k % 2) {
        sxx += head.records[i - 1].coords[0] * head.records[i - 1].coords[0];
      }
    }
    const double se = std::sqrt(fit.sigma2_hat / sxx);
    const double z = (fit.alpha(k) - coeffs.alphas[static_cast<std::size_t>(k - 1)]) / se;
    ok = ok && std::abs(z) <= 3;
    detail += fmt("alpha_%g z %.2f; ", k, z);
  }
  for (int k = 0; k < 2; ++k) {
    double ss = 0;
    long n = 0;
    for (const auto& r : s.records) {
      if (r.section == k) {
        ss += r.coords[0] * r.coords[0];
        ++n;
      }
    }
    const double empirical = ss / static_cast<double>(n);
    const double av = asymptotic_return_variance(coeffs, k);
    const double rel = std::abs(empirical / av - 1);
    ok = ok && rel < 0.01;
    detail += fmt("AV(%g) %.5g vs %.5g (%.2e); ", k, av, empirical, rel);
  }
  report(10, ok, detail);
}

}  // namespace

int main() {
  const fs::path work =
      fs::temp_directory_path() / ("floquet_acceptance_" + std::to_string(getpid()));
  fs::create_directories(work);
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  const double vdp_std = criteria6to7_11(work);
  criterion8(vdp_std);
  criterion9(vdp_std);
  criterion10();
  fs::remove_all(work);
  int failures = 0;
  for (int id = 1; id <= 11; ++id) {
    const auto& o = outcomes[id];
    std::printf("criterion %2d: %s  %s\n", id, o.ok ? "PASS" : "FAIL", o.detail.c_str());
    if (!o.ok) ++failures;
  }
  std::printf("%d criteria failed\n", failures);
  return failures;
}
