#include "doctest.h"

#include "floquet/errors.hpp"
#include "floquet/integrate.hpp"
#include "floquet/kernels.hpp"
#include "floquet/orbit.hpp"
#include "floquet/stochsim.hpp"

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

struct Bench {
  PeriodicOrbit orbit;
  std::vector<FloquetMode> modes;
};

const Bench& vdp() {
  static const Bench b = [] {
    auto orbit = find_periodic_orbit(make_van_der_pol(0.1, 0.99), vec({2.0, 0.0}), 2.0);
    auto modes = nontrivial_modes(orbit);
    return Bench{std::move(orbit), std::move(modes)};
  }();
  return b;
}

const Bench& lorenz() {
  static const Bench b = [] {
    auto orbit =
        find_periodic_orbit(make_lorenz(10.0, 240.0, 8.0 / 3.0), vec({10.0, 10.0, 200.0}), 0.5);
    auto modes = nontrivial_modes(orbit);
    return Bench{std::move(orbit), std::move(modes)};
  }();
  return b;
}

// Samples a trajectory's dense output on a uniform grid.
SamplePath sample(const Trajectory& traj, double t_end, long steps) {
  SamplePath path;
  path.dim = traj.dim();
  path.dt = t_end / static_cast<double>(steps);
  for (long j = 0; j <= steps; ++j) {
    const double t = t_end * static_cast<double>(j) / static_cast<double>(steps);
    const Vec x = traj.at(t);
    path.times.push_back(t);
    for (int c = 0; c < path.dim; ++c) path.states.push_back(x[c]);
  }
  return path;
}

bool same_series(const CrossingSeries& a, const CrossingSeries& b) {
  if (a.size() != b.size() || a.discarded_out_of_gate != b.discarded_out_of_gate ||
      a.discarded_out_of_order != b.discarded_out_of_order) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.index != y.index || x.section != y.section || x.time != y.time || x.coords != y.coords) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("noise sources have unit variance") {
  for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::laplace}) {
    NoiseSource src(123, kind);
    const int n = 1'000'000;
    double s1 = 0, s2 = 0, sabs = 0;
    for (int i = 0; i < n; ++i) {
      const double v = src.next();
      s1 += v;
      s2 += v * v;
      sabs += std::abs(v);
    }
    const double var = s2 / n - (s1 / n) * (s1 / n);
    // fourth moment: 3 (gaussian), 6 (laplace)
    const double kurt = kind == NoiseKind::gaussian ? 3.0 : 6.0;
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt((kurt - 1.0) / n));
    const double mean_abs = kind == NoiseKind::gaussian ? std::sqrt(2.0 / std::numbers::pi)
                                                        : 1.0 / std::numbers::sqrt2;
    CHECK(std::abs(sabs / n - mean_abs) < 0.003);
  }
  CHECK(parse_noise_kind("laplace") == NoiseKind::laplace);
  CHECK_THROWS_AS(parse_noise_kind("cauchy"), UsageError);
}

TEST_CASE("deterministic limit is explicit Euler") {
  const SystemSpec osc("osc", 2, {},
                       [](const Vec& x) { return vec({x[1], -x[0]}); },
                       [](const Vec&) {
                         Mat j(2, 2);
                         j << 0, 1, -1, 0;
                         return j;
                       });
  double errs[2];
  for (int i = 0; i < 2; ++i) {
    SdeOptions opt;
    opt.dt = i == 0 ? 1e-4 : 5e-5;
    opt.t_end = 2 * std::numbers::pi;
    opt.g = 0.0;
    const auto path = simulate_path(osc, vec({1.0, 0.0}), opt);
    errs[i] = (path.state(path.size() - 1) - vec({1.0, 0.0})).norm();
  }
  CHECK(errs[0] < 10 * 1e-4);
  CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("same seed gives bit-identical paths") {
  SdeOptions opt;
  opt.g = 5e-5;
  opt.dt = default_dt(vdp().orbit.tau);
  opt.t_end = vdp().orbit.tau;
  opt.seed = 99;
  const auto a = simulate_path(vdp().orbit.system, vdp().orbit.anchor, opt);
  const auto b = simulate_path(vdp().orbit.system, vdp().orbit.anchor, opt);
  CHECK(a.states == b.states);
  opt.seed = 100;
  const auto c = simulate_path(vdp().orbit.system, vdp().orbit.anchor, opt);
  CHECK(a.states != c.states);
}

TEST_CASE("Ornstein-Uhlenbeck stationary variance") {
  const SystemSpec ou("ou", 1, {}, [](const Vec& x) { return Vec(-x); },
                      [](const Vec&) { return Mat(Mat::Constant(1, 1, -1.0)); });
  const double g = 0.3, dt = 0.01;
  SdeOptions opt;
  opt.g = g;
  opt.dt = dt;
  opt.t_end = 1e4;
  opt.seed = 7;
  double s2 = 0;
  long n = 0;
  simulate_sde(ou, vec({0.0}), opt, [&](long j, double, const Vec& x) {
    if (j >= 1000) {
      s2 += x[0] * x[0];
      ++n;
    }
    return true;
  });
  const double var = s2 / static_cast<double>(n);
  const double expected = g * g / 2.0;
  // Sample variance of an AR(1) with rho = 1 - dt: relative SE ~ sqrt(2 / (n dt)).
  const double se = expected * std::sqrt(2.0 / (static_cast<double>(n) * dt));
  MESSAGE("OU variance " << var << " expected " << expected << " se " << se);
  CHECK(std::abs(var - expected) < 3 * se);
}

TEST_CASE("escape radius") {
  SdeOptions opt;
  opt.dt = 1e-3;
  opt.t_end = 10;
  opt.escape_radius = 3.0;
  const SystemSpec grow("grow", 1, {}, [](const Vec& x) { return Vec(x); },
                        [](const Vec&) { return Mat(Mat::Constant(1, 1, 1.0)); });
  try {
    simulate_sde(grow, vec({1.0}), opt, [](long, double, const Vec&) { return true; });
    FAIL("expected escape");
  } catch (const TrajectoryEscape& e) {
    CHECK(e.time() == doctest::Approx(std::log(3.0)).epsilon(0.01));
  }
  CHECK_THROWS_AS(simulate_sde(grow, vec({1.0}), SdeOptions{-1.0, 1e-3, 1.0, 0},
                               [](long, double, const Vec&) { return true; }),
                  InvalidParameter);
}

TEST_CASE("section placement") {
  const auto& b = vdp();
  const auto one = place_sections(b.orbit, b.modes[0], 1);
  REQUIRE(one.p() == 1);
  CHECK(one.sections[0].time == 0.0);
  CHECK(one.sections[0].base == b.orbit.anchor);

  const auto set = place_sections(b.orbit, b.modes[0], 50);
  REQUIRE(set.p() == 50);
  for (int k = 0; k < 50; ++k) {
    const auto& s = set.sections[k];
    CHECK(s.time == doctest::Approx(b.orbit.tau * k / 50).epsilon(1e-15));
    // Flowing the orbit from station k for tau/50 lands on station k+1.
    const auto& next = set.sections[(k + 1) % 50];
    const Vec landed = integrate(b.orbit.system, s.base, b.orbit.tau / 50, 1e-12).at(b.orbit.tau / 50);
    CHECK((landed - next.base).norm() < 1e-8 * set.diameter);
    const Vec f = b.orbit.system.field(s.base);
    CHECK(s.normal.dot(f) >= 0.1 * f.norm());
    CHECK(std::abs(s.frame.col(0).dot(s.normal)) < 1e-13);
  }
  CHECK_THROWS_AS(place_sections(b.orbit, b.modes[0], 0), InvalidParameter);
}

TEST_CASE("section placement in three dimensions") {
  const auto& b = lorenz();
  const auto set = place_sections(b.orbit, b.modes, 50);
  REQUIRE(set.p() == 50);
  for (const auto& s : set.sections) {
    const Vec f = b.orbit.system.field(s.base);
    CHECK(s.normal.dot(f) == doctest::Approx(f.norm()));
    const Mat gram = s.frame.transpose() * s.frame;
    CHECK((gram - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK((s.frame.transpose() * s.normal).norm() < 1e-12);
    CHECK(s.frame.col(0).dot(s.mode_directions.col(0)) ==
          doctest::Approx(s.mode_directions.col(0).norm()));
  }
}

TEST_CASE("orbit itself crosses every section at its base point") {
  const auto& b = vdp();
  const auto set = place_sections(b.orbit, b.modes[0], 50);
  const auto traj = integrate(b.orbit.system, b.orbit.anchor, 3 * b.orbit.tau, 1e-12);
  const auto path = sample(traj, 3 * b.orbit.tau, 60000);
  const auto series = detect_crossings(path, set, 0.0);
  CHECK(series.size() == 150);
  for (const auto& r : series.records) {
    CHECK(std::abs(r.coords[0]) < 1e-6);
    CHECK(r.time == doctest::Approx(b.orbit.tau * r.index / 50).epsilon(1e-6));
    CHECK(r.section == r.index % 50);
  }
}

TEST_CASE("perturbation along the mode decays geometrically at section 0") {
  const auto& b = vdp();
  const double lambda = b.modes[0].lambda();
  const auto set = place_sections(b.orbit, b.modes[0], 50);
  const double t_end = 4.5 * b.orbit.tau;
  // Section-0 coordinates of the flow from x0, sampled finely enough that the
  // chord bias of linear interpolation is negligible.
  auto returns = [&](const Vec& x0) {
    const auto traj = integrate(b.orbit.system, x0, t_end, 1e-13);
    CrossingDetector det(set, set.gate_radius(0.0), 1e9);
    const long steps = 2'000'000;
    for (long j = 0; j <= steps; ++j) {
      const double t = t_end * static_cast<double>(j) / static_cast<double>(steps);
      det.feed(t, traj.at(t));
    }
    std::vector<double> out;
    for (const auto& r : det.series().records) {
      if (r.section == 0) out.push_back(r.coords[0]);
    }
    return out;
  };
  // The unperturbed flow carries the shooting residual; differences isolate
  // the linearized response.
  const auto base = returns(b.orbit.anchor);
  const auto pert = returns(b.orbit.anchor + 1e-6 * b.modes[0].eigvec());
  REQUIRE(base.size() == 4);
  REQUIRE(pert.size() == 4);
  double prev = 1e-6 * b.modes[0].eigvec().norm();
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = pert[i] - base[i];
    CHECK(std::abs(c / prev / lambda - 1.0) < 0.01);
    prev = c;
  }
}

TEST_CASE("halving dt changes noise-free crossings at first order") {
  const auto& b = vdp();
  const auto set = place_sections(b.orbit, b.modes[0], 10);
  double coord[3];
  for (int i = 0; i < 3; ++i) {
    CrossingRun run;
    run.n_cycles = 1;
    run.dt = default_dt(b.orbit.tau) / std::pow(2.0, i);
    coord[i] = simulate_crossings(b.orbit, set, run, 0).records[4].coords[0];
  }
  const double ratio = (coord[0] - coord[1]) / (coord[1] - coord[2]);
  MESSAGE("dt-halving ratio " << ratio);
  CHECK(ratio > 1.5);
  CHECK(ratio < 2.5);
}

TEST_CASE("van der Pol run: exactly n p crossings in cyclic order") {
  const auto& b = vdp();
  const auto set = place_sections(b.orbit, b.modes[0], 50);
  CrossingRun run;
  run.g = 5e-5;
  run.n_cycles = 100;
  const auto series = simulate_crossings(b.orbit, set, run, 2024);
  REQUIRE(series.size() == 5000);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& r = series.records[i];
    CHECK(r.index == static_cast<long>(i) + 1);
    CHECK(r.section == static_cast<int>((i + 1) % 50));
    if (i > 0) CHECK(r.time > series.records[i - 1].time);
  }
}

TEST_CASE("detector errors") {
  const auto& b = vdp();
  const auto set = place_sections(b.orbit, b.modes[0], 5);
  {
    // Parked at the anchor: no crossing for a whole revolution.
    CrossingDetector det(set, set.gate_radius(0.0), 1e9);
    det.feed(0.0, b.orbit.anchor);
    det.feed(0.5 * b.orbit.tau, b.orbit.anchor);
    try {
      det.feed(1.01 * b.orbit.tau, b.orbit.anchor);
      FAIL("expected a cycle slip");
    } catch (const CrossingSequence& e) {
      CHECK(e.revolution() == 0);
    }
  }
  {
    // Skipping over section 2 and landing past section 3.
    CrossingDetector det(set, set.gate_radius(0.0), 1e9);
    const double tau = b.orbit.tau;
    const double h = tau / 20000;
    for (double t = 0; t < 0.39 * tau; t += h) det.feed(t, b.orbit.path.at(t));
    REQUIRE(det.crossings() == 1);
    det.feed(0.39 * tau, b.orbit.path.at(0.39 * tau));
    CHECK_THROWS_AS(
        [&] {
          for (double t = 0.61 * tau; t < 1.5 * tau; t += h) det.feed(t, b.orbit.path.at(t));
        }(),
        CrossingSequence);
  }
  {
    CrossingDetector det(set, set.gate_radius(0.0), 10.0);
    det.feed(0.0, b.orbit.anchor);
    CHECK_THROWS_AS(det.feed(0.1, vec({100.0, 0.0})), TrajectoryEscape);
  }
}

TEST_CASE("ensemble lanes are bit-identical to the scalar reference") {
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5, 6, 7};
  auto check = [&](const Bench& b, double g, long cycles, NoiseKind noise) {
    const auto set = place_sections(b.orbit, b.modes, 10);
    CrossingRun run;
    run.g = g;
    run.n_cycles = cycles;
    run.noise = noise;
    for (auto backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
      if (!kernels::backend_available(backend)) continue;
      kernels::set_backend(backend);
      const auto lanes = simulate_crossings_ensemble(b.orbit, set, run, seeds);
      REQUIRE(lanes.size() == 7);
      for (std::size_t l = 0; l < 7; ++l) {
        REQUIRE(!lanes[l].error);
        CHECK(same_series(lanes[l].series, simulate_crossings(b.orbit, set, run, seeds[l])));
      }
    }
    kernels::set_backend(kernels::best_backend());
  };
  check(vdp(), 5e-5, 3, NoiseKind::gaussian);
  check(vdp(), 2e-4, 2, NoiseKind::laplace);
  check(lorenz(), 3e-2, 3, NoiseKind::gaussian);

  const auto radial_orbit = find_periodic_orbit(make_radial_oscillator(1.0, 0.1), vec({1.0, 0.0}),
                                                6.0);
  Bench radial{radial_orbit, nontrivial_modes(radial_orbit)};
  check(radial, 1e-3, 2, NoiseKind::gaussian);
}

TEST_CASE("ensemble reports per-lane failures") {
  const auto& b = vdp();
  const auto set = place_sections(b.orbit, b.modes[0], 10);
  CrossingRun run;
  run.g = 5e-5;
  run.n_cycles = 2;
  run.escape_factor = 0.5;  // anchor itself is outside
  const std::uint64_t seeds[] = {1, 2};
  const auto lanes = simulate_crossings_ensemble(b.orbit, set, run, seeds);
  for (const auto& lane : lanes) {
    REQUIRE(lane.error);
    CHECK_THROWS_AS(std::rethrow_exception(lane.error), TrajectoryEscape);
  }
}
