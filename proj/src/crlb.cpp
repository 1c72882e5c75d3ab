#include "floquet/crlb.hpp"

#include "floquet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace floquet {

namespace {

void validate(const ParCoefficients& c) {
  if (c.alphas.empty()) throw InvalidParameter("PAR needs at least one section");
  for (double a : c.alphas) {
    if (!std::isfinite(a)) throw InvalidParameter("PAR coefficient is not finite");
  }
  if (!(c.sigma2 > 0.0)) throw InvalidParameter("innovation variance must be positive");
  if (!(std::abs(c.lambda()) < 1.0)) {
    throw Instability("PAR is not stable: |lambda| = " + std::to_string(std::abs(c.lambda())));
  }
}

// Squared gain alpha_m for a 1-based index taken modulo p.
double gain2(const ParCoefficients& c, long m) {
  const long p = c.p();
  const double a = c.alphas[static_cast<std::size_t>(((m - 1) % p + p) % p)];
  return a * a;
}

// sum_{i=first}^{p} prod_{j=i}^{p} alpha^2_{j+k}, by Horner from the inside.
double tail_products(const ParCoefficients& c, int first, int k) {
  double acc = 0.0;
  for (int j = first; j <= c.p(); ++j) acc = gain2(c, j + k) * (1.0 + acc);
  return acc;
}

// Cumulative composite Simpson on an even number of equal intervals; odd
// nodes use the matching three-point partial rule.
std::vector<double> cumulative_simpson(const std::vector<double>& g, double h) {
  const std::size_t n = g.size() - 1;
  std::vector<double> c(g.size(), 0.0);
  for (std::size_t m = 0; m + 2 <= n; m += 2) {
    c[m + 1] = c[m] + h / 12.0 * (5.0 * g[m] + 8.0 * g[m + 1] - g[m + 2]);
    c[m + 2] = c[m] + h / 3.0 * (g[m] + 4.0 * g[m + 1] + g[m + 2]);
  }
  return c;
}

double simpson(const std::vector<double>& g, double h) {
  double acc = 0.0;
  for (std::size_t m = 0; m + 2 < g.size(); m += 2) acc += g[m] + 4.0 * g[m + 1] + g[m + 2];
  return acc * h / 3.0;
}

}  // namespace

double ParCoefficients::lambda() const {
  double prod = 1.0;
  for (double a : alphas) prod *= a;
  return prod;
}

double asymptotic_return_variance(const ParCoefficients& coeffs, int k) {
  validate(coeffs);
  const double lam = coeffs.lambda();
  return coeffs.sigma2 / (1.0 - lam * lam) * (1.0 + tail_products(coeffs, 2, k));
}

std::vector<double> fisher_information_diagonal(const ParCoefficients& coeffs, long n_cycles) {
  validate(coeffs);
  if (n_cycles < 1) throw InvalidParameter("n_cycles must be >= 1");
  const double lam = coeffs.lambda();
  std::vector<double> out(static_cast<std::size_t>(coeffs.p()));
  for (int k = 1; k <= coeffs.p(); ++k) {
    // var(x_{k-1}) / sigma2, with sigma2 cancelled analytically
    out[k - 1] = static_cast<double>(n_cycles) * (1.0 + tail_products(coeffs, 2, k - 1)) /
                 (1.0 - lam * lam);
  }
  return out;
}

BoundResult discrete_bound(const ParCoefficients& coeffs, long n_cycles) {
  validate(coeffs);
  if (n_cycles < 1) throw InvalidParameter("n_cycles must be >= 1");
  for (double a : coeffs.alphas) {
    if (a == 0.0) throw DegenerateCoefficient("a PAR gain is zero; lambda = 0 has no bound");
  }
  const double lam = coeffs.lambda();
  const double lam2 = lam * lam;
  double sum = 0.0;
  for (int k = 1; k <= coeffs.p(); ++k) sum += lam2 / tail_products(coeffs, 1, k);
  const double value = (1.0 - lam2) * sum / static_cast<double>(n_cycles);
  return {value, n_cycles, BoundKind::discrete, coeffs.p()};
}

BoundResult continuum_bound(const FloquetMode& mode, long n_cycles) {
  if (n_cycles < 1) throw InvalidParameter("n_cycles must be >= 1");
  const double lam = mode.lambda();
  const double mag = std::abs(lam);
  if (!(mag >= kMinMultiplier && mag <= kMaxMultiplier)) {
    throw NumericRange("|lambda| = " + std::to_string(mag) + " outside [1e-6, 1 - 1e-9]");
  }
  const int n = mode.n_grid();
  if (n < 2 || n % 2 != 0) throw InvalidParameter("mode grid needs an even number of intervals");
  const double h = mode.tau() / n;
  const auto log_abs = mode.log_abs_values();

  // phi^-2 on one period, scaled by exp(-shift).
  std::vector<double> logw(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) logw[j] = -2.0 * log_abs[j];
  const double shift = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(logw.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(logw[j] - shift);
  const std::vector<double> cum = cumulative_simpson(w, h);
  const double total = cum.back();
  const double inv_lam2 = 1.0 / (lam * lam);

  // Outer integrand 1 / (phi(s)^2 A(s)) with
  // A(s) = int_s^tau phi^-2 + lambda^-2 int_0^s phi^-2 (quasi-periodic wrap).
  std::vector<double> log_outer(logw.size());
  for (std::size_t j = 0; j < logw.size(); ++j) {
    const double a_scaled = (total - cum[j]) + inv_lam2 * cum[j];
    if (!(a_scaled > 0.0) || !std::isfinite(a_scaled)) {
      throw NumericRange("inner integral left floating-point range");
    }
    log_outer[j] = logw[j] - shift - std::log(a_scaled);
  }
  const double peak = *std::max_element(log_outer.begin(), log_outer.end());
  std::vector<double> outer(log_outer.size());
  for (std::size_t j = 0; j < outer.size(); ++j) outer[j] = std::exp(log_outer[j] - peak);
  const double integral = simpson(outer, h) * std::exp(peak);
  if (!std::isfinite(integral)) throw NumericRange("outer integral overflowed");

  const double value = (1.0 - lam * lam) * integral / static_cast<double>(n_cycles);
  return {value, n_cycles, BoundKind::continuum, 0};
}

ParCoefficients coefficients_from_mode(const FloquetMode& mode, int p) {
  if (p < 1) throw InvalidParameter("p must be >= 1");
  ParCoefficients c;
  c.alphas.resize(static_cast<std::size_t>(p));
  double prev_log = mode.log_abs_at(0.0);
  int prev_sign = mode.sign_at(0.0);
  for (int k = 1; k <= p; ++k) {
    const double t = k == p ? mode.tau() : mode.tau() * k / p;
    const double lg = mode.log_abs_at(t);
    const int sg = mode.sign_at(t);
    c.alphas[k - 1] = (sg * prev_sign) * std::exp(lg - prev_log);
    prev_log = lg;
    prev_sign = sg;
  }
  return c;
}

}  // namespace floquet
