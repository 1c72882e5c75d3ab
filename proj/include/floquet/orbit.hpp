#pragma once

#include "floquet/dynsys.hpp"
#include "floquet/integrate.hpp"

#include <cstdint>
#include <vector>

namespace floquet {

/// A stable limit cycle located by shooting. `anchor` is gamma(0), the point
/// of maximum |f| on the cycle; `path` covers [0, tau].
struct PeriodicOrbit {
  SystemSpec system;
  double tau = 0.0;
  Vec anchor;
  Trajectory path;
  Mat monodromy;
  /// Integral of tr Df over one period, by quadrature along `path`.
  double trace_integral = 0.0;
  /// Integration tolerance used for every derived solve.
  double tol = kOrbitTol;
  /// |flow(anchor, tau) - anchor| at the final shooting iterate.
  double residual = 0.0;
};

struct OrbitOptions {
  double integration_tol = kOrbitTol;
  int relax_periods = 20;
  int max_newton = 40;
};

/// Relaxes the guess onto the attractor, then Newton-shoots on (state, period)
/// with a phase condition on the hyperplane through the relaxed point.
/// `tol` bounds the shooting residual.
PeriodicOrbit find_periodic_orbit(const SystemSpec& system, const Vec& guess,
                                  double guess_period, double tol = 1e-9,
                                  const OrbitOptions& options = {});

/// Rebuilds the orbit data from a known anchor and period without shooting.
PeriodicOrbit orbit_from_anchor(const SystemSpec& system, const Vec& anchor, double tau,
                                double integration_tol = kOrbitTol);

struct Multipliers {
  /// Eigenvalue nearest 1 (the tangent direction).
  double trivial = 1.0;
  /// Remaining eigenvalues, by descending magnitude.
  std::vector<double> nontrivial;
};

/// Real, distinct eigenvalues of a monodromy matrix via its characteristic
/// polynomial (closed form for dim 2 and 3). Complex or repeated eigenvalues
/// raise UnsupportedSpectrum.
Multipliers floquet_multipliers(const Mat& monodromy);
Multipliers floquet_multipliers(const PeriodicOrbit& orbit);

/// Unit eigenvector of `m` for a simple real eigenvalue, largest-magnitude
/// component positive.
Vec eigenvector(const Mat& m, double lambda);

/// Scalar flow restricted to one nontrivial Floquet mode, sampled on an
/// equispaced grid of `n_grid` intervals per period over `periods` periods.
/// phi(0) = 1. Within the first period the sign is +; a point one period later
/// takes the sign of the point before it times the orientation of the
/// direction relative to that point (so phi(t + tau) = lambda phi(t)).
class FloquetMode {
 public:
  FloquetMode() = default;
  FloquetMode(double lambda, Vec eigvec, double tau, int n_grid, int periods, int dim,
              std::vector<double> log_abs, std::vector<std::int8_t> sign,
              std::vector<double> directions);

  double lambda() const noexcept { return lambda_; }
  const Vec& eigvec() const noexcept { return eigvec_; }
  double tau() const noexcept { return tau_; }
  int n_grid() const noexcept { return n_grid_; }
  int periods() const noexcept { return periods_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return log_abs_.size(); }

  double time(std::size_t j) const;
  double log_abs(std::size_t j) const { return log_abs_[j]; }
  int sign(std::size_t j) const { return sign_[j]; }
  double phi(std::size_t j) const;
  /// Unit mode direction at grid point j (continuous in t, not sign-adjusted).
  Vec direction(std::size_t j) const;

  std::span<const double> log_abs_values() const noexcept { return log_abs_; }
  std::span<const std::int8_t> signs() const noexcept { return sign_; }

  /// Four-point Lagrange interpolation of log|phi| and of the direction.
  double log_abs_at(double t) const;
  Vec direction_at(double t) const;
  /// Sign at t: that of the grid point at or immediately before t, except
  /// at exact grid times.
  int sign_at(double t) const;
  double phi_at(double t) const;

  /// Copy with phi and the directions negated (lambda unchanged).
  FloquetMode negated() const;

 private:
  double lambda_ = 0.0;
  Vec eigvec_;
  double tau_ = 0.0;
  int n_grid_ = 0;
  int periods_ = 1;
  int dim_ = 0;
  std::vector<double> log_abs_;
  std::vector<std::int8_t> sign_;
  std::vector<double> dirs_;
};

inline constexpr int kDefaultGrid = 4096;

FloquetMode mode_restriction(const PeriodicOrbit& orbit, double lambda,
                             int n_grid = kDefaultGrid, int periods = 1);

/// One mode per nontrivial multiplier, by descending |lambda|.
std::vector<FloquetMode> nontrivial_modes(const PeriodicOrbit& orbit, int n_grid = kDefaultGrid);

}  // namespace floquet
