#pragma once

#include "floquet/dynsys.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace floquet {

/// Accepted steps of an embedded Runge-Kutta integration together with the
/// per-step continuous-extension coefficients. Width is the number of
/// integrated components (state, or state plus variational columns).
class DenseSolution {
 public:
  DenseSolution() = default;
  explicit DenseSolution(std::size_t width) : width_(width) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return times_.size(); }
  std::span<const double> times() const noexcept { return times_; }
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }

  std::span<const double> sample(std::size_t i) const {
    return {values_.data() + i * width_, width_};
  }
  /// Index of the step [t_i, t_{i+1}] containing t (clamped to the span).
  std::size_t step_index(double t) const;
  /// Continuous extension at t; exact at sample times.
  void evaluate(double t, std::span<double> out) const;
  /// Continuous extension inside step `step` at t (no search).
  void evaluate_in_step(std::size_t step, double t, std::span<double> out) const;
  /// The first `count` components as a standalone solution.
  DenseSolution leading(std::size_t count) const;

  // Builder interface used by the integrator.
  void push_sample(double t, std::span<const double> y);
  void push_step(std::span<const double> coeffs);

 private:
  std::size_t width_ = 0;
  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<double> dense_;  // 5 * width per step
};

/// State trajectory with dense output.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int dim, DenseSolution solution) : dim_(dim), sol_(std::move(solution)) {}

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return sol_.size(); }
  std::span<const double> times() const noexcept { return sol_.times(); }
  double t_begin() const { return sol_.t_begin(); }
  double t_end() const { return sol_.t_end(); }
  Vec state(std::size_t i) const;
  Vec at(double t) const;
  const DenseSolution& dense() const noexcept { return sol_; }

 private:
  int dim_ = 0;
  DenseSolution sol_;
};

/// State plus a dim x m block of variational columns integrated in the same
/// step sequence. Columns are stored at unit scale with a per-column
/// log-magnitude accumulator; the true columns are unit_column * exp(log).
class VariationalSolution {
 public:
  VariationalSolution() = default;
  VariationalSolution(int dim, int columns, DenseSolution solution,
                      std::vector<double> log_scales);

  int dim() const noexcept { return dim_; }
  int columns() const noexcept { return cols_; }
  std::size_t size() const noexcept { return sol_.size(); }
  std::span<const double> times() const noexcept { return sol_.times(); }
  double t_end() const { return sol_.t_end(); }

  Vec state(std::size_t i) const;
  Vec state_at(double t) const;
  /// Stored unit-scale columns at sample i.
  Mat scaled_columns(std::size_t i) const;
  /// Per-column log magnitudes at sample i.
  std::span<const double> log_scales(std::size_t i) const {
    return {logs_.data() + i * cols_, static_cast<std::size_t>(cols_)};
  }
  /// Columns at t in the factored form (scaled block, log scales).
  void columns_at(double t, Mat& scaled, std::span<double> logs) const;
  /// Unfactored matrix (dim x m) at sample i / at time t. May overflow for
  /// extreme accumulations; prefer the factored accessors.
  Mat matrix(std::size_t i) const;
  Mat matrix_at(double t) const;
  /// log |det| of the square variational matrix at sample i (m == dim).
  double log_abs_det(std::size_t i) const;

  Trajectory trajectory() const;
  const DenseSolution& dense() const noexcept { return sol_; }

 private:
  int dim_ = 0;
  int cols_ = 0;
  DenseSolution sol_;
  std::vector<double> logs_;  // cols_ per sample; logs valid from that sample on
};

struct IntegratorOptions {
  double tol = 1e-8;
  std::size_t max_steps = 5'000'000;
};

inline constexpr double kOrbitTol = 1e-10;
inline constexpr double kDefaultTol = 1e-8;

/// Autonomous right-hand side on a flat vector.
using FlatRhs = std::function<void(std::span<const double> y, std::span<double> dy)>;
/// Called after every accepted step with (t, y); may rescale components that
/// are excluded from error control. Returns true if y was modified.
using StepHook = std::function<bool(double t, std::span<double> y)>;

/// Dormand-Prince 5(4) with PI step control. The error norm (mixed
/// absolute/relative, atol = rtol = tol) runs over the first
/// `error_components` entries only.
DenseSolution dopri5(const FlatRhs& rhs, std::span<const double> y0, double t_end,
                     std::size_t error_components, const IntegratorOptions& opt,
                     const StepHook& hook = {});

Trajectory integrate(const SystemSpec& system, const Vec& x0, double t_end,
                     double tol = kDefaultTol);

/// Principal solution matrix along the trajectory from x0 (Phi(0) = I).
VariationalSolution integrate_variational(const SystemSpec& system, const Vec& x0,
                                          double t_end, double tol = kDefaultTol);

/// Variational flow of an arbitrary dim x m block of initial columns. By
/// default only the state is under error control, so the step sequence equals
/// that of integrate(); `control_columns` adds the columns, which are then
/// renormalized after every step instead of only when leaving [1e-8, 1e8].
VariationalSolution integrate_variational(const SystemSpec& system, const Vec& x0,
                                          const Mat& initial_columns, double t_end,
                                          double tol = kDefaultTol, bool control_columns = false);

/// Integral of tr Df along the trajectory from its start to t (5-point
/// Gauss-Legendre on every step's continuous extension).
double trace_integral(const SystemSpec& system, const Trajectory& traj, double t);

}  // namespace floquet
