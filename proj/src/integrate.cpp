#include "floquet/integrate.hpp"

#include "floquet/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace floquet {

// ---------------------------------------------------------------------------
// DenseSolution

void DenseSolution::push_sample(double t, std::span<const double> y) {
  times_.push_back(t);
  values_.insert(values_.end(), y.begin(), y.end());
}

void DenseSolution::push_step(std::span<const double> coeffs) {
  dense_.insert(dense_.end(), coeffs.begin(), coeffs.end());
}

std::size_t DenseSolution::step_index(double t) const {
  if (times_.size() < 2) return 0;
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t idx = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  return std::min(idx, times_.size() - 2);
}

void DenseSolution::evaluate_in_step(std::size_t step, double t, std::span<double> out) const {
  const double t0 = times_[step];
  const double h = times_[step + 1] - t0;
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  const double* r = dense_.data() + step * 5 * width_;
  const std::size_t n = width_;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = r[j] + th * (r[n + j] + th1 * (r[2 * n + j] + th * (r[3 * n + j] + th1 * r[4 * n + j])));
  }
}

void DenseSolution::evaluate(double t, std::span<double> out) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it != times_.end() && *it == t) {
    auto s = sample(static_cast<std::size_t>(it - times_.begin()));
    std::copy(s.begin(), s.end(), out.begin());
    return;
  }
  evaluate_in_step(step_index(t), t, out);
}

// ---------------------------------------------------------------------------
// Trajectory

Vec Trajectory::state(std::size_t i) const {
  auto s = sol_.sample(i);
  Vec x(dim_);
  for (int k = 0; k < dim_; ++k) x[k] = s[k];
  return x;
}

Vec Trajectory::at(double t) const {
  std::array<double, kMaxDim> buf{};
  sol_.evaluate(t, std::span<double>(buf.data(), sol_.width()));
  Vec x(dim_);
  for (int k = 0; k < dim_; ++k) x[k] = buf[k];
  return x;
}

// ---------------------------------------------------------------------------
// VariationalSolution

VariationalSolution::VariationalSolution(int dim, int columns, DenseSolution solution,
                                         std::vector<double> log_scales)
    : dim_(dim), cols_(columns), sol_(std::move(solution)), logs_(std::move(log_scales)) {}

Vec VariationalSolution::state(std::size_t i) const {
  auto s = sol_.sample(i);
  Vec x(dim_);
  for (int k = 0; k < dim_; ++k) x[k] = s[k];
  return x;
}

Vec VariationalSolution::state_at(double t) const {
  std::vector<double> buf(sol_.width());
  sol_.evaluate(t, buf);
  Vec x(dim_);
  for (int k = 0; k < dim_; ++k) x[k] = buf[k];
  return x;
}

Mat VariationalSolution::scaled_columns(std::size_t i) const {
  auto s = sol_.sample(i);
  Mat m(dim_, cols_);
  for (int c = 0; c < cols_; ++c)
    for (int r = 0; r < dim_; ++r) m(r, c) = s[dim_ + c * dim_ + r];
  return m;
}

void VariationalSolution::columns_at(double t, Mat& scaled, std::span<double> logs) const {
  const auto times = sol_.times();
  std::vector<double> buf(sol_.width());
  std::size_t log_index;
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it != times.end() && *it == t) {
    log_index = static_cast<std::size_t>(it - times.begin());
    auto s = sol_.sample(log_index);
    std::copy(s.begin(), s.end(), buf.begin());
  } else {
    log_index = sol_.step_index(t);
    sol_.evaluate_in_step(log_index, t, buf);
  }
  scaled.resize(dim_, cols_);
  for (int c = 0; c < cols_; ++c)
    for (int r = 0; r < dim_; ++r) scaled(r, c) = buf[dim_ + c * dim_ + r];
  auto l = log_scales(log_index);
  std::copy(l.begin(), l.end(), logs.begin());
}

Mat VariationalSolution::matrix(std::size_t i) const {
  Mat m = scaled_columns(i);
  auto l = log_scales(i);
  for (int c = 0; c < cols_; ++c) m.col(c) *= std::exp(l[c]);
  return m;
}

Mat VariationalSolution::matrix_at(double t) const {
  Mat m;
  std::array<double, kMaxDim> logs{};
  columns_at(t, m, std::span<double>(logs.data(), cols_));
  for (int c = 0; c < cols_; ++c) m.col(c) *= std::exp(logs[c]);
  return m;
}

double VariationalSolution::log_abs_det(std::size_t i) const {
  if (cols_ != dim_) throw InvalidParameter("log_abs_det needs a square variational block");
  const Mat m = scaled_columns(i);
  double acc = std::log(std::abs(m.determinant()));
  for (double l : log_scales(i)) acc += l;
  return acc;
}

Trajectory VariationalSolution::trajectory() const {
  return Trajectory(dim_, sol_.leading(static_cast<std::size_t>(dim_)));
}

DenseSolution DenseSolution::leading(std::size_t count) const {
  DenseSolution out(count);
  out.times_ = times_;
  out.values_.reserve(times_.size() * count);
  for (std::size_t i = 0; i < times_.size(); ++i) {
    auto s = sample(i);
    out.values_.insert(out.values_.end(), s.begin(), s.begin() + count);
  }
  const std::size_t steps = times_.empty() ? 0 : times_.size() - 1;
  out.dense_.reserve(steps * 5 * count);
  for (std::size_t st = 0; st < steps; ++st) {
    for (std::size_t k = 0; k < 5; ++k) {
      const double* r = dense_.data() + (st * 5 + k) * width_;
      out.dense_.insert(out.dense_.end(), r, r + count);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// continuous extension (Hairer & Wanner, dopri5 contd5)
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dp

double error_scale(double tol, double a, double b) {
  return tol + tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

DenseSolution dopri5(const FlatRhs& rhs, std::span<const double> y0, double t_end,
                     std::size_t error_components, const IntegratorOptions& opt,
                     const StepHook& hook) {
  const double tol = opt.tol;
  if (!(tol >= 1e-14 && tol <= 1e-3)) throw InvalidParameter("tolerance must lie in [1e-14, 1e-3]");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidParameter("t_end must be positive");
  const std::size_t n = y0.size();
  const std::size_t ne = std::min(error_components, n);

  std::vector<double> y(y0.begin(), y0.end()), y1(n), ytmp(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), coeffs(5 * n);

  DenseSolution out(n);
  out.push_sample(0.0, y);

  rhs(y, k1);

  // Initial step guess (Hairer's hinit, order 5).
  double h;
  {
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < ne; ++i) {
      const double sk = tol + tol * std::abs(y[i]);
      dnf += (k1[i] / sk) * (k1[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, t_end);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * k1[i];
    rhs(ytmp, k2);
    double der2 = 0.0;
    for (std::size_t i = 0; i < ne; ++i) {
      const double sk = tol + tol * std::abs(y[i]);
      der2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                     : std::pow(0.01 / der12, 1.0 / 5.0);
    h = std::min({100.0 * std::abs(h), h1, t_end});
  }

  constexpr double beta = 0.04;
  constexpr double expo1 = 0.2 - beta * 0.75;
  constexpr double facc1 = 1.0 / 0.2;  // max shrink 5x
  constexpr double facc2 = 1.0 / 10.0;  // max growth 10x
  constexpr double safe = 0.9;
  double facold = 1e-4;
  bool reject = false;
  double t = 0.0;
  std::size_t steps = 0;

  while (t < t_end) {
    if (++steps > opt.max_steps) throw IntegrationFailure("step budget exhausted", t);
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw IntegrationFailure("step size underflow", t);
    }

    using namespace dp;
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs(ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    rhs(y1, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < ne; ++i) {
      const double e =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sk = error_scale(tol, y[i], y1[i]);
      err += (e / sk) * (e / sk);
    }
    err = std::sqrt(err / static_cast<double>(ne));
    if (!std::isfinite(err)) {
      // Non-finite stage values: shrink hard and retry.
      h *= 0.1;
      reject = true;
      continue;
    }

    const double fac11 = std::pow(err, expo1);
    double fac = fac11 / std::pow(facold, beta);
    fac = std::max(facc2, std::min(facc1, fac / safe));
    double hnew = h / fac;

    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      for (std::size_t i = 0; i < n; ++i) {
        const double dy = y1[i] - y[i];
        const double bspl = h * k1[i] - dy;
        coeffs[i] = y[i];
        coeffs[n + i] = dy;
        coeffs[2 * n + i] = bspl;
        coeffs[3 * n + i] = dy - h * k7[i] - bspl;
        coeffs[4 * n + i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                 d6 * k6[i] + d7 * k7[i]);
      }
      out.push_step(coeffs);
      t = last ? t_end : t + h;
      std::swap(y, y1);
      std::swap(k1, k7);
      if (hook && hook(t, y)) rhs(y, k1);
      out.push_sample(t, y);
      if (reject) hnew = std::min(hnew, h);
      reject = false;
      h = hnew;
    } else {
      h = h / std::min(facc1, fac11 / safe);
      reject = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_state(const SystemSpec& system, const Vec& x0) {
  if (x0.size() != system.dim()) throw InvalidParameter("initial state has wrong dimension");
  if (!x0.allFinite()) throw InvalidParameter("initial state is not finite");
}

}  // namespace

Trajectory integrate(const SystemSpec& system, const Vec& x0, double t_end, double tol) {
  check_state(system, x0);
  const int d = system.dim();
  auto rhs = [&system, d](std::span<const double> y, std::span<double> dy) {
    Vec x(d);
    for (int k = 0; k < d; ++k) x[k] = y[k];
    const Vec f = system.field(x);
    for (int k = 0; k < d; ++k) dy[k] = f[k];
  };
  std::vector<double> y0(x0.data(), x0.data() + d);
  return Trajectory(d, dopri5(rhs, y0, t_end, d, {tol}));
}

VariationalSolution integrate_variational(const SystemSpec& system, const Vec& x0,
                                          double t_end, double tol) {
  return integrate_variational(system, x0, Mat::Identity(system.dim(), system.dim()), t_end, tol);
}

VariationalSolution integrate_variational(const SystemSpec& system, const Vec& x0,
                                          const Mat& initial_columns, double t_end, double tol,
                                          bool control_columns) {
  check_state(system, x0);
  const int d = system.dim();
  const int m = static_cast<int>(initial_columns.cols());
  if (initial_columns.rows() != d || m < 1) {
    throw InvalidParameter("variational block must have dim rows and at least one column");
  }
  // Under column error control the columns are kept at unit scale every step
  // so that the mixed absolute/relative tolerance acts relatively on them.
  const double kLow = control_columns ? 1.0 : 1e-8;
  const double kHigh = control_columns ? 1.0 : 1e8;

  std::vector<double> y0(static_cast<std::size_t>(d + d * m));
  std::vector<double> logs(static_cast<std::size_t>(m));
  for (int k = 0; k < d; ++k) y0[k] = x0[k];
  for (int c = 0; c < m; ++c) {
    const double nrm = initial_columns.col(c).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw InvalidParameter("variational column is zero");
    for (int r = 0; r < d; ++r) y0[d + c * d + r] = initial_columns(r, c) / nrm;
    logs[c] = std::log(nrm);
  }

  auto rhs = [&system, d, m](std::span<const double> y, std::span<double> dy) {
    Vec x(d);
    for (int k = 0; k < d; ++k) x[k] = y[k];
    const Vec f = system.field(x);
    const Mat j = system.jacobian(x);
    for (int k = 0; k < d; ++k) dy[k] = f[k];
    for (int c = 0; c < m; ++c) {
      const double* col = y.data() + d + c * d;
      for (int r = 0; r < d; ++r) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += j(r, k) * col[k];
        dy[d + c * d + r] = acc;
      }
    }
  };

  std::vector<double> all_logs = logs;
  auto hook = [&](double t, std::span<double> y) {
    bool changed = false;
    for (int c = 0; c < m; ++c) {
      double* col = y.data() + d + c * d;
      double nrm = 0.0;
      for (int r = 0; r < d; ++r) nrm += col[r] * col[r];
      nrm = std::sqrt(nrm);
      if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        throw NumericRange("variational column left floating-point range at t = " +
                           std::to_string(t));
      }
      if (nrm < kLow || nrm > kHigh) {
        for (int r = 0; r < d; ++r) col[r] /= nrm;
        logs[c] += std::log(nrm);
        changed = true;
      }
    }
    all_logs.insert(all_logs.end(), logs.begin(), logs.end());
    return changed;
  };

  const std::size_t controlled = control_columns ? y0.size() : static_cast<std::size_t>(d);
  DenseSolution sol = dopri5(rhs, y0, t_end, controlled, {tol}, hook);
  return VariationalSolution(d, m, std::move(sol), std::move(all_logs));
}

double trace_integral(const SystemSpec& system, const Trajectory& traj, double t) {
  // 5-point Gauss-Legendre nodes/weights on [0, 1]
  static constexpr std::array<double, 5> x{0.04691007703066800, 0.23076534494715845, 0.5,
                                           0.76923465505284155, 0.95308992296933200};
  static constexpr std::array<double, 5> w{0.11846344252809454, 0.23931433524968324,
                                           0.28444444444444444, 0.23931433524968324,
                                           0.11846344252809454};
  const auto times = traj.times();
  const int d = traj.dim();
  std::array<double, kMaxDim> buf{};
  std::span<double> out(buf.data(), static_cast<std::size_t>(d));
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < times.size() && times[s] < t; ++s) {
    const double a = times[s];
    const double b = std::min(times[s + 1], t);
    const double h = b - a;
    for (std::size_t q = 0; q < 5; ++q) {
      traj.dense().evaluate_in_step(s, a + x[q] * h, out);
      Vec xs(d);
      for (int k = 0; k < d; ++k) xs[k] = buf[k];
      acc += w[q] * h * system.jacobian(xs).trace();
    }
  }
  return acc;
}

}  // namespace floquet
