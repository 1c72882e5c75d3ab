#pragma once

#include "floquet/dynsys.hpp"
#include "floquet/stochsim.hpp"

#include <vector>

namespace floquet {

/// Least-squares fit of the periodic autoregression x_i = A_{i mod p} x_{i-1}.
/// alphas[k-1] maps section k-1 to section k (k = 1..p, section p is 0);
/// each is m x m with m the coordinate dimension.
struct ParFit {
  int p = 0;
  int coord_dim = 0;
  std::vector<Mat> alphas;
  double sigma2_hat = 0.0;
  /// Pairs used per transition, same indexing as alphas.
  std::vector<long> counts;

  double alpha(int k) const { return alphas[static_cast<std::size_t>(k - 1)](0, 0); }
};

struct FitOptions {
  /// Subtract each section's mean coordinate before fitting. Off only for
  /// data known to be mean zero.
  bool center = true;
};

/// Pairs are taken only between records with consecutive global indices.
/// Raises InsufficientData if a transition has fewer than two pairs and
/// DegenerateData if its Gram matrix is singular.
ParFit fit_par(const CrossingSeries& series, const FitOptions& options = {});

struct MultiplierEstimate {
  /// Descending magnitude. One entry in 2D.
  std::vector<double> lambda_hat;
  /// The estimated product had a complex pair; real parts reported.
  bool complex_pair = false;
  long n_cycles = 0;
};

/// 2D: product of the alphas. Otherwise eigenvalues of A_p ... A_1.
MultiplierEstimate multiplier_estimate(const ParFit& fit);

/// Rewrites frame coordinates as amplitudes along each section's projected
/// mode directions.
CrossingSeries to_mode_coordinates(const CrossingSeries& series, const SectionSet& sections);

/// Extracts one coordinate as a scalar series.
CrossingSeries coordinate_series(const CrossingSeries& series, int component);

struct EstimateOptions {
  FitOptions fit;
  /// Fit scalar models along each projected mode instead of matrix maps.
  bool mode_projection = false;
};

MultiplierEstimate estimate_multipliers(const CrossingSeries& series, const SectionSet& sections,
                                        const EstimateOptions& options = {});

}  // namespace floquet
