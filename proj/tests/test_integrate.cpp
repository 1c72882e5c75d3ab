#include "doctest.h"

#include "floquet/dynsys.hpp"
#include "floquet/errors.hpp"
#include "floquet/integrate.hpp"

#include <cmath>
#include <numbers>

using namespace floquet;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

SystemSpec linear_system(const Mat& a) {
  return SystemSpec(
      "linear", static_cast<int>(a.rows()), {}, [a](const Vec& x) { return Vec(a * x); },
      [a](const Vec&) { return a; });
}

}  // namespace

TEST_CASE("harmonic oscillator returns after 2 pi") {
  Mat a(2, 2);
  a << 0, 1, -1, 0;
  const auto traj = integrate(linear_system(a), vec({1, 0}), 2 * std::numbers::pi, 1e-12);
  const Vec end = traj.state(traj.size() - 1);
  CHECK(std::abs(end[0] - 1.0) < 1e-9);
  CHECK(std::abs(end[1]) < 1e-9);
  CHECK(traj.t_end() == 2 * std::numbers::pi);
}

TEST_CASE("exponential decay to e^-1") {
  Mat a(1, 1);
  a << -1;
  const double tol = 1e-8;
  const auto traj = integrate(linear_system(a), vec({1}), 1.0, tol);
  CHECK(std::abs(traj.state(traj.size() - 1)[0] - std::exp(-1.0)) < 10 * tol);
}

TEST_CASE("trajectory invariants: increasing times, exact samples, continuity") {
  const auto vdp = make_van_der_pol(0.1, 0.99);
  const auto traj = integrate(vdp, vec({2.0, 0.0}), 5.0, 1e-9);
  const auto t = traj.times();
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
  for (std::size_t i = 0; i < t.size(); i += 7) CHECK((traj.at(t[i]) - traj.state(i)).norm() == 0.0);
  // Approaching a sample from inside its step lands on the sample.
  for (std::size_t i = 1; i < t.size(); i += 11) {
    const double eps = 1e-9 * (t[i] - t[i - 1]);
    CHECK((traj.at(t[i] - eps) - traj.state(i)).norm() < 1e-6);
  }
}

TEST_CASE("tolerance validation") {
  const auto vdp = make_van_der_pol(0.1, 0.99);
  CHECK_THROWS_AS(integrate(vdp, vec({2, 0}), 1.0, 1e-2), InvalidParameter);
  CHECK_THROWS_AS(integrate(vdp, vec({2, 0}), 1.0, 1e-15), InvalidParameter);
  CHECK_THROWS_AS(integrate(vdp, vec({2, 0}), -1.0, 1e-8), InvalidParameter);
}

TEST_CASE("finite-time blow-up reports the failure time") {
  // x' = x^2 from x = 1 blows up at t = 1.
  const SystemSpec blow(
      "blow", 1, {}, [](const Vec& x) { return Vec(x.cwiseProduct(x)); },
      [](const Vec& x) {
        Mat j(1, 1);
        j(0, 0) = 2 * x[0];
        return j;
      });
  try {
    integrate(blow, vec({1.0}), 2.0, 1e-8);
    FAIL("expected IntegrationFailure");
  } catch (const IntegrationFailure& e) {
    CHECK(e.time() == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("variational solution of a diagonal linear system") {
  Mat a(2, 2);
  a << -1, 0, 0, -2;
  const auto var = integrate_variational(linear_system(a), vec({1, 1}), 1.0, 1e-12);
  const Mat phi0 = var.matrix(0);
  CHECK((phi0 - Mat::Identity(2, 2)).norm() == 0.0);
  const Mat phi = var.matrix(var.size() - 1);
  CHECK(std::abs(phi(0, 0) - std::exp(-1.0)) < 1e-9);
  CHECK(std::abs(phi(1, 1) - std::exp(-2.0)) < 1e-9);
  CHECK(std::abs(phi(0, 1)) < 1e-12);
  CHECK(std::abs(phi(1, 0)) < 1e-12);
}

TEST_CASE("variational state path matches the plain integration step for step") {
  const auto lz = make_lorenz(10.0, 240.0, 8.0 / 3.0);
  const Vec x0 = vec({36.17610384, 14.40555028, 286.84692493});
  const auto plain = integrate(lz, x0, 0.47, 1e-10);
  const auto var = integrate_variational(lz, x0, 0.47, 1e-10);
  REQUIRE(plain.size() == var.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain.times()[i] == var.times()[i]);
    CHECK((plain.state(i) - var.state(i)).norm() == 0.0);
  }
}

TEST_CASE("columns are renormalized into a log accumulator") {
  // exp(-60) is far outside [1e-8, 1e8]. The state decays too, so the column
  // has to be under error control to stay accurate.
  Mat a(1, 1);
  a << -30.0;
  const auto var = integrate_variational(linear_system(a), vec({1.0}), Mat::Identity(1, 1), 2.0,
                                         1e-11, true);
  int renormalizations = 0;
  for (std::size_t i = 0; i < var.size(); ++i) {
    const double c = std::abs(var.scaled_columns(i)(0, 0));
    CHECK(c >= 1e-8);
    CHECK(c <= 1e8);
    if (i > 0 && var.log_scales(i)[0] != var.log_scales(i - 1)[0]) ++renormalizations;
  }
  CHECK(renormalizations >= 3);
  const std::size_t last = var.size() - 1;
  CHECK(var.log_abs_det(last) == doctest::Approx(-60.0).epsilon(1e-8));
  Mat cols;
  double lg = 0;
  var.columns_at(1.3, cols, std::span<double>(&lg, 1));
  CHECK(std::log(std::abs(cols(0, 0))) + lg == doctest::Approx(-39.0).epsilon(1e-8));
  CHECK(var.matrix_at(0.5)(0, 0) == doctest::Approx(std::exp(-15.0)).epsilon(1e-8));
}

TEST_CASE("Liouville identity along a van der Pol trajectory") {
  const auto vdp = make_van_der_pol(0.1, 0.99);
  const auto var = integrate_variational(vdp, vec({1.338432, -0.556673}), 2.5, 1e-10);
  const auto traj = var.trajectory();
  for (std::size_t i = var.size() / 4; i < var.size(); i += 5) {
    const double t = var.times()[i];
    const double lhs = var.log_abs_det(i);
    const double rhs = trace_integral(vdp, traj, t);
    CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("halving the tolerance does not worsen the final-state error") {
  const auto vdp = make_van_der_pol(0.1, 0.99);
  const Vec x0 = vec({2.0, 0.0});
  const double t_end = 3.0;
  const auto end = [&](double tol) {
    const auto tr = integrate(vdp, x0, t_end, tol);
    return tr.state(tr.size() - 1);
  };
  double prev = 1e300;
  for (double tol : {1e-6, 5e-7, 2.5e-7, 1.25e-7}) {
    const double err = (end(tol) - end(tol / 100)).norm();
    CHECK(err <= prev);
    prev = err;
  }
}

TEST_CASE("default mode renormalizes only outside [1e-8, 1e8]") {
  // Radial column decays as exp(-2 mu t): crosses 1e-8 once by t = 10.
  const auto sys = make_radial_oscillator(1.0, 1.0);
  const auto var = integrate_variational(sys, vec({1.0, 0.0}), 10.0, 1e-12);
  int renormalizations = 0;
  for (std::size_t i = 1; i < var.size(); ++i) {
    if (var.log_scales(i)[0] != var.log_scales(i - 1)[0]) ++renormalizations;
    CHECK(var.log_scales(i)[1] == 0.0);
  }
  CHECK(renormalizations == 1);
  const std::size_t last = var.size() - 1;
  const double log_radial =
      std::log(var.scaled_columns(last).col(0).norm()) + var.log_scales(last)[0];
  CHECK(log_radial == doctest::Approx(-20.0).epsilon(1e-6));
}
