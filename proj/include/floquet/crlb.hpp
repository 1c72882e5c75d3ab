#pragma once

#include "floquet/orbit.hpp"

#include <vector>

namespace floquet {

/// Coefficients of the mean-zero periodic autoregression
/// x_i = alpha_{i mod p} x_{i-1} + eps_i, eps_i ~ N(0, sigma2).
/// alphas[k-1] holds alpha_k, the gain from section k-1 into section k.
struct ParCoefficients {
  std::vector<double> alphas;
  double sigma2 = 1.0;

  int p() const noexcept { return static_cast<int>(alphas.size()); }
  /// Floquet multiplier: the product of all gains.
  double lambda() const;
};

enum class BoundKind { discrete, continuum };

struct BoundResult {
  double value = 0.0;  // variance lower bound
  long n_cycles = 1;
  BoundKind kind = BoundKind::continuum;
  int p = 0;  // sections (discrete bounds only)
};

/// Stationary variance of returns to section k (0-based, modulo p).
double asymptotic_return_variance(const ParCoefficients& coeffs, int k);

/// Diagonal of the asymptotic Fisher information for (alpha_1..alpha_p)
/// after n_cycles cycles; entry k-1 is n var(x at section k-1) / sigma2.
std::vector<double> fisher_information_diagonal(const ParCoefficients& coeffs, long n_cycles);

/// Cramer-Rao bound J I^-1 J' for unbiased estimates of lambda = prod alpha_k
/// with p sections.
BoundResult discrete_bound(const ParCoefficients& coeffs, long n_cycles);

/// Continuum-of-sections limit evaluated from the scalar mode restriction:
/// (1 - lambda^2) / n * int_0^tau ds / (phi(s)^2 int_0^tau phi(t + s)^-2 dt).
/// Uses the first period of the mode grid; composite Simpson in log space.
BoundResult continuum_bound(const FloquetMode& mode, long n_cycles);

/// Section gains alpha_k = phi(t_k) / phi(t_{k-1}) for p equal-time sections.
ParCoefficients coefficients_from_mode(const FloquetMode& mode, int p);

/// Accepted multiplier magnitudes for the continuum bound.
inline constexpr double kMinMultiplier = 1e-6;
inline constexpr double kMaxMultiplier = 1.0 - 1e-9;

}  // namespace floquet
