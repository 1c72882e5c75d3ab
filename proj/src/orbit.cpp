#include "floquet/orbit.hpp"

#include "floquet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace floquet {

namespace {

// Signed distance of x from the hyperplane through `base` with unit normal n.
double signed_distance(const Vec& x, const Vec& base, const Vec& n) { return n.dot(x - base); }

/// First upward return of the flow from x0 to the hyperplane through x0
/// normal to f(x0), looking out to `t_max`.
double first_return_time(const SystemSpec& system, const Vec& x0, double t_max, double tol) {
  const Vec n = system.field(x0).normalized();
  const Trajectory traj = integrate(system, x0, t_max, tol);
  const auto times = traj.times();

  double excursion = 0.0;
  bool been_below = false;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const Vec a = traj.state(i), b = traj.state(i + 1);
    excursion = std::max(excursion, (b - x0).norm());
    const double sa = signed_distance(a, x0, n), sb = signed_distance(b, x0, n);
    if (sb < 0.0) been_below = true;
    if (!(been_below && sa < 0.0 && sb >= 0.0)) continue;

    // Illinois false position on the continuous extension inside this step.
    double ta = times[i], tb = times[i + 1], fa = sa, fb = sb;
    int side = 0;
    for (int it = 0; it < 100 && tb - ta > 1e-15 * std::max(1.0, tb); ++it) {
      const double tc = (fa * tb - fb * ta) / (fa - fb);
      const double fc = signed_distance(traj.at(tc), x0, n);
      if (fc == 0.0) {
        ta = tb = tc;
        break;
      }
      if (fc < 0.0) {
        ta = tc;
        fa = fc;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        tb = tc;
        fb = fc;
        if (side == +1) fa *= 0.5;
        side = +1;
      }
    }
    const double tc = 0.5 * (ta + tb);
    // Far-field crossings of the (global) hyperplane are not returns.
    if ((traj.at(tc) - x0).norm() <= 0.25 * excursion) return tc;
  }
  throw NoReturn("no return to the initial hyperplane within t = " + std::to_string(t_max));
}

struct ShootResult {
  Vec x;
  double period;
  double residual;
};

/// Newton on (x, T): flow_T(x) - x = 0 with <n, x - base> = 0.
ShootResult shoot(const SystemSpec& system, const Vec& base, double period, double tol,
                  const OrbitOptions& opt) {
  const int d = system.dim();
  const Vec n = system.field(base).normalized();
  Vec x = base;
  double T = period;
  double residual = 0.0;
  for (int it = 0; it < opt.max_newton; ++it) {
    if (!(T > 0.0) || !std::isfinite(T)) break;
    const VariationalSolution var = integrate_variational(system, x, T, opt.integration_tol);
    const std::size_t last = var.size() - 1;
    const Vec xT = var.state(last);
    const Vec r = xT - x;
    const double phase = signed_distance(x, base, n);
    residual = r.norm();
    if (residual < tol && std::abs(phase) < tol) return {x, T, residual};

    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d + 1, d + 1);
    jac.topLeftCorner(d, d) = var.matrix(last) - Mat::Identity(d, d);
    jac.topRightCorner(d, 1) = system.field(xT);
    jac.bottomLeftCorner(1, d) = n.transpose();
    Eigen::VectorXd rhs(d + 1);
    rhs.head(d) = -r;
    rhs[d] = -phase;
    const Eigen::VectorXd delta = jac.fullPivLu().solve(rhs);
    if (!delta.allFinite()) break;
    x += delta.head(d);
    T += delta[d];
  }
  throw OrbitNotFound("shooting did not converge (residual " + std::to_string(residual) + ")");
}

/// Point of maximum |f| along one period of the trajectory.
Vec max_speed_point(const SystemSpec& system, const Trajectory& traj, double tau) {
  constexpr int kSamples = 8192;
  double best_t = 0.0, best = -1.0;
  for (int k = 0; k < kSamples; ++k) {
    const double t = tau * k / kSamples;
    const double v = system.field(traj.at(t)).norm();
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  // Golden-section refinement on the bracketing sample interval.
  double a = best_t - tau / kSamples, b = best_t + tau / kSamples;
  const auto speed = [&](double t) {
    t = std::fmod(t + tau, tau);
    return system.field(traj.at(t)).norm();
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), e = a + g * (b - a);
  double fc = speed(c), fe = speed(e);
  for (int it = 0; it < 60; ++it) {
    if (fc > fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - g * (b - a);
      fc = speed(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + g * (b - a);
      fe = speed(e);
    }
  }
  return traj.at(std::fmod(0.5 * (a + b) + tau, tau));
}

void check_distinct(const std::vector<double>& ev) {
  for (std::size_t i = 0; i < ev.size(); ++i)
    for (std::size_t j = i + 1; j < ev.size(); ++j)
      if (std::abs(ev[i] - ev[j]) <= 1e-6 * std::max(1.0, std::abs(ev[i]))) {
        throw UnsupportedSpectrum("repeated Floquet multiplier " + std::to_string(ev[i]));
      }
}

double polish_cubic_root(double c2, double c1, double c0, double x) {
  // p(x) = x^3 - c2 x^2 + c1 x - c0
  for (int it = 0; it < 4; ++it) {
    const double p = ((x - c2) * x + c1) * x - c0;
    const double dp = (3.0 * x - 2.0 * c2) * x + c1;
    if (dp == 0.0) break;
    const double step = p / dp;
    x -= step;
    if (std::abs(step) <= 1e-17 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

std::vector<double> real_eigenvalues(const Mat& m) {
  const auto d = m.rows();
  if (d == 2) {
    const double tr = m.trace(), det = m.determinant();
    const double disc = 0.25 * tr * tr - det;
    if (disc < 0.0) throw UnsupportedSpectrum("complex Floquet multiplier pair");
    const double s = std::sqrt(disc);
    // Avoid cancellation: larger-magnitude root first, the other from det.
    const double r1 = 0.5 * tr + std::copysign(s, tr);
    const double r2 = r1 != 0.0 ? det / r1 : 0.5 * tr - std::copysign(s, tr);
    return {r1, r2};
  }
  if (d == 3) {
    const double c2 = m.trace();
    const double c1 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) -
                      m(0, 2) * m(2, 0) + m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    const double c0 = m.determinant();
    // Depressed cubic y^3 + p y + q with x = y + c2/3.
    const double shift = c2 / 3.0;
    const double p = c1 - c2 * c2 / 3.0;
    const double q = -2.0 * c2 * c2 * c2 / 27.0 + c2 * c1 / 3.0 - c0;
    const double disc = -(4.0 * p * p * p + 27.0 * q * q);
    if (disc < 0.0 || p >= 0.0) throw UnsupportedSpectrum("complex Floquet multiplier pair");
    const double rad = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * rad), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    std::vector<double> roots(3);
    for (int k = 0; k < 3; ++k) {
      const double y = rad * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0);
      roots[k] = polish_cubic_root(c2, c1, c0, y + shift);
    }
    return roots;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(m)};
  std::vector<double> roots;
  for (const auto& z : es.eigenvalues()) {
    if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z))) {
      throw UnsupportedSpectrum("complex Floquet multiplier pair");
    }
    roots.push_back(z.real());
  }
  return roots;
}

}  // namespace

PeriodicOrbit orbit_from_anchor(const SystemSpec& system, const Vec& anchor, double tau,
                                double integration_tol) {
  const VariationalSolution var = integrate_variational(system, anchor, tau, integration_tol);
  const std::size_t last = var.size() - 1;
  PeriodicOrbit orbit{system, tau, anchor, var.trajectory(), var.matrix(last), 0.0,
                      integration_tol, (var.state(last) - anchor).norm()};
  orbit.trace_integral = trace_integral(system, orbit.path, tau);
  return orbit;
}

PeriodicOrbit find_periodic_orbit(const SystemSpec& system, const Vec& guess,
                                  double guess_period, double tol, const OrbitOptions& options) {
  if (guess.size() != system.dim()) throw InvalidParameter("guess has wrong dimension");
  if (!(guess_period > 0.0)) throw InvalidParameter("guess period must be positive");
  if (!(tol > 0.0)) throw InvalidParameter("shooting tolerance must be positive");

  const Trajectory relax =
      integrate(system, guess, options.relax_periods * guess_period, kDefaultTol);
  const Vec start = relax.state(relax.size() - 1);
  if (system.field(start).norm() == 0.0) throw OrbitNotFound("guess relaxed onto an equilibrium");

  const double t0 = first_return_time(system, start, 2.5 * guess_period, options.integration_tol);
  const ShootResult first = shoot(system, start, t0, tol, options);

  const Trajectory loop = integrate(system, first.x, first.period, options.integration_tol);
  Vec anchor = max_speed_point(system, loop, first.period);
  if (system.symmetry() && anchor[0] < 0.0) anchor = system.symmetry()(anchor);

  const ShootResult polished = shoot(system, anchor, first.period, tol, options);
  PeriodicOrbit orbit =
      orbit_from_anchor(system, polished.x, polished.period, options.integration_tol);
  orbit.residual = polished.residual;
  return orbit;
}

Multipliers floquet_multipliers(const Mat& monodromy) {
  if (monodromy.rows() != monodromy.cols() || monodromy.rows() < 2) {
    throw InvalidParameter("monodromy must be square with dim >= 2");
  }
  std::vector<double> ev = real_eigenvalues(monodromy);
  check_distinct(ev);
  auto trivial = std::min_element(ev.begin(), ev.end(), [](double a, double b) {
    return std::abs(a - 1.0) < std::abs(b - 1.0);
  });
  Multipliers out;
  out.trivial = *trivial;
  ev.erase(trivial);
  std::sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  out.nontrivial = std::move(ev);
  return out;
}

Multipliers floquet_multipliers(const PeriodicOrbit& orbit) {
  return floquet_multipliers(orbit.monodromy);
}

Vec eigenvector(const Mat& m, double lambda) {
  const auto d = m.rows();
  const Eigen::MatrixXd shifted = Eigen::MatrixXd(m) - lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted, Eigen::ComputeFullV);
  Vec v = svd.matrixV().col(d - 1);
  v.normalize();
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
  return v;
}

// ---------------------------------------------------------------------------
// FloquetMode

FloquetMode::FloquetMode(double lambda, Vec eigvec, double tau, int n_grid, int periods, int dim,
                         std::vector<double> log_abs, std::vector<std::int8_t> sign,
                         std::vector<double> directions)
    : lambda_(lambda),
      eigvec_(std::move(eigvec)),
      tau_(tau),
      n_grid_(n_grid),
      periods_(periods),
      dim_(dim),
      log_abs_(std::move(log_abs)),
      sign_(std::move(sign)),
      dirs_(std::move(directions)) {
  const std::size_t points = static_cast<std::size_t>(n_grid) * periods + 1;
  if (n_grid < 2 || periods < 1 || log_abs_.size() != points || sign_.size() != points ||
      (!dirs_.empty() && dirs_.size() != points * static_cast<std::size_t>(dim))) {
    throw InvalidParameter("inconsistent Floquet mode grid");
  }
}

double FloquetMode::time(std::size_t j) const {
  if (j == size() - 1) return tau_ * periods_;
  return tau_ * static_cast<double>(j) / n_grid_;
}

double FloquetMode::phi(std::size_t j) const { return sign_[j] * std::exp(log_abs_[j]); }

Vec FloquetMode::direction(std::size_t j) const {
  Vec u(dim_);
  for (int k = 0; k < dim_; ++k) u[k] = dirs_[j * dim_ + k];
  return u;
}

namespace {

// Lagrange weights for nodes {-1, 0, 1, 2} at offset s in [0, 1].
void lagrange4(double s, double w[4]) {
  w[0] = -s * (s - 1.0) * (s - 2.0) / 6.0;
  w[1] = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
  w[2] = -(s + 1.0) * s * (s - 2.0) / 2.0;
  w[3] = (s + 1.0) * s * (s - 1.0) / 6.0;
}

}  // namespace

namespace {

struct Stencil {
  std::size_t first;  // index of node -1
  double s;           // offset from node 0
  bool exact;
  std::size_t exact_index;
};

Stencil stencil(double t, double h, std::size_t points) {
  double u = t / h;
  // Times within rounding of a grid node are that node.
  if (std::abs(u - std::round(u)) <= 1e-9 * std::max(1.0, std::abs(u))) u = std::round(u);
  const double j0 = std::floor(u);
  const std::size_t last = points - 1;
  if (u <= 0.0) return {0, 0.0, true, 0};
  if (u >= static_cast<double>(last)) return {0, 0.0, true, last};
  std::size_t j = static_cast<std::size_t>(j0);
  if (static_cast<double>(j) == u) return {0, 0.0, true, j};
  // Keep the 4-point stencil inside the grid.
  std::size_t first = j == 0 ? 0 : j - 1;
  if (first + 3 > last) first = last - 3;
  return {first, u - static_cast<double>(first + 1), false, 0};
}

}  // namespace

double FloquetMode::log_abs_at(double t) const {
  const Stencil st = stencil(t, tau_ / n_grid_, size());
  if (st.exact) return log_abs_[st.exact_index];
  double w[4];
  lagrange4(st.s, w);
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) acc += w[k] * log_abs_[st.first + k];
  return acc;
}

Vec FloquetMode::direction_at(double t) const {
  if (dirs_.empty()) throw InvalidParameter("mode carries no direction samples");
  const Stencil st = stencil(t, tau_ / n_grid_, size());
  if (st.exact) return direction(st.exact_index);
  double w[4];
  lagrange4(st.s, w);
  Vec u = Vec::Zero(dim_);
  for (int k = 0; k < 4; ++k) u += w[k] * direction(st.first + k);
  return u.normalized();
}

int FloquetMode::sign_at(double t) const {
  const double h = tau_ / n_grid_;
  const Stencil st = stencil(t, h, size());
  if (st.exact) return sign_[st.exact_index];
  const auto j = static_cast<std::size_t>(std::floor(t / h + 1e-9));
  return sign_[std::min(j, size() - 1)];
}

double FloquetMode::phi_at(double t) const { return sign_at(t) * std::exp(log_abs_at(t)); }

FloquetMode FloquetMode::negated() const {
  FloquetMode out = *this;
  for (auto& s : out.sign_) s = static_cast<std::int8_t>(-s);
  for (auto& c : out.dirs_) c = -c;
  out.eigvec_ = -out.eigvec_;
  return out;
}

FloquetMode mode_restriction(const PeriodicOrbit& orbit, double lambda, int n_grid,
                             int periods) {
  if (n_grid < 2 || n_grid % 2 != 0) throw InvalidParameter("n_grid must be even and >= 2");
  if (periods < 1) throw InvalidParameter("periods must be >= 1");
  const Multipliers mult = floquet_multipliers(orbit);
  const bool known = std::any_of(mult.nontrivial.begin(), mult.nontrivial.end(), [&](double m) {
    return std::abs(m - lambda) <= 1e-6 * std::max(1.0, std::abs(m));
  });
  if (!known) {
    throw InvalidParameter("lambda = " + std::to_string(lambda) +
                           " is not a nontrivial multiplier of the orbit");
  }
  const int d = orbit.system.dim();
  const Vec v = eigenvector(orbit.monodromy, lambda);
  const VariationalSolution var =
      integrate_variational(orbit.system, orbit.anchor, Mat(v), periods * orbit.tau, orbit.tol);

  const std::size_t per = static_cast<std::size_t>(n_grid);
  const std::size_t points = per * periods + 1;
  std::vector<double> log_abs(points), dirs(points * d);
  std::vector<std::int8_t> sign(points, 1);

  Mat col;
  double lg = 0.0;
  for (std::size_t j = 0; j < points; ++j) {
    const double t = j == points - 1 ? periods * orbit.tau : orbit.tau * double(j) / n_grid;
    var.columns_at(t, col, std::span<double>(&lg, 1));
    const double nrm = col.col(0).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm) || !std::isfinite(lg)) {
      throw NumericRange("mode magnitude left the representable range at t = " +
                         std::to_string(t));
    }
    log_abs[j] = j == 0 ? 0.0 : std::log(nrm) + lg;
    for (int k = 0; k < d; ++k) dirs[j * d + k] = col(k, 0) / nrm;
  }

  const auto dir_dot = [&](std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k) acc += dirs[a * d + k] * dirs[b * d + k];
    return acc;
  };
  for (std::size_t j = 1; j < points; ++j) {
    if (dir_dot(j, j - 1) <= 0.0) {
      throw InvalidParameter("grid too coarse: mode direction turns by 90 degrees or more between "
                             "grid points");
    }
    if (j >= per) {
      sign[j] = static_cast<std::int8_t>(dir_dot(j, j - per) < 0.0 ? -sign[j - per] : sign[j - per]);
    }
  }
  return FloquetMode(lambda, v, orbit.tau, n_grid, periods, d, std::move(log_abs),
                     std::move(sign), std::move(dirs));
}

std::vector<FloquetMode> nontrivial_modes(const PeriodicOrbit& orbit, int n_grid) {
  std::vector<FloquetMode> modes;
  for (double lambda : floquet_multipliers(orbit).nontrivial) {
    modes.push_back(mode_restriction(orbit, lambda, n_grid));
  }
  return modes;
}

}  // namespace floquet
