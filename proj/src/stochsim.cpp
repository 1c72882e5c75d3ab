#include "floquet/stochsim.hpp"

#include "floquet/errors.hpp"
#include "floquet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace floquet {

NoiseKind parse_noise_kind(std::string_view text) {
  if (text == "gaussian") return NoiseKind::gaussian;
  if (text == "laplace") return NoiseKind::laplace;
  throw UsageError("unknown noise kind '" + std::string(text) + "' (gaussian|laplace)");
}

std::string_view noise_kind_name(NoiseKind kind) noexcept {
  return kind == NoiseKind::gaussian ? "gaussian" : "laplace";
}

double NoiseSource::next() {
  if (kind_ == NoiseKind::gaussian) return normal_(engine_);
  // Inverse CDF of the Laplace law with scale 1/sqrt(2) (unit variance).
  double u = 0.0;
  do {
    u = uniform_(engine_);
  } while (u == 0.0);
  constexpr double b = 1.0 / std::numbers::sqrt2;
  return u < 0.5 ? b * std::log(2.0 * u) : -b * std::log(2.0 * (1.0 - u));
}

double SectionSet::gate_radius(double g) const {
  return std::max(1e3 * g * std::sqrt(tau), 1e-2 * diameter);
}

namespace {

Vec unit(const Vec& v) { return v / v.norm(); }

// Completes `cols` (orthonormal) to `count` columns using coordinate axes.
void complete_frame(std::vector<Vec>& cols, const Vec& normal, int count) {
  const int d = static_cast<int>(normal.size());
  for (int axis = 0; axis < d && static_cast<int>(cols.size()) < count; ++axis) {
    Vec e = Vec::Zero(d);
    e[axis] = 1.0;
    e -= e.dot(normal) * normal;
    for (const Vec& c : cols) e -= e.dot(c) * c;
    if (e.norm() > 1e-6) cols.push_back(unit(e));
  }
}

}  // namespace

SectionSet place_sections(const PeriodicOrbit& orbit, std::span<const FloquetMode> modes, int p) {
  if (p < 1) throw InvalidParameter("section count must be at least 1");
  if (modes.empty()) throw InvalidParameter("place_sections needs at least one mode");
  const int d = orbit.system.dim();
  for (const auto& m : modes) {
    if (m.dim() != d || std::abs(m.tau() - orbit.tau) > 1e-9 * orbit.tau) {
      throw InvalidParameter("mode does not belong to this orbit");
    }
  }
  SectionSet set;
  set.dim = d;
  set.tau = orbit.tau;

  Vec lo = orbit.path.state(0), hi = lo;
  for (std::size_t i = 0; i < orbit.path.size(); ++i) {
    const Vec x = orbit.path.state(i);
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
    set.max_radius = std::max(set.max_radius, x.norm());
  }
  set.diameter = (hi - lo).norm();

  set.sections.reserve(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) {
    Section s;
    s.time = orbit.tau * k / p;
    s.base = k == 0 ? orbit.anchor : orbit.path.at(s.time);
    const Vec f = orbit.system.field(s.base);
    const Vec n = f / f.norm();
    s.normal = n;
    s.mode_directions = Mat::Zero(d, d - 1);
    std::vector<Vec> cols;
    double lead = 0.0;
    for (std::size_t i = 0; i < modes.size() && static_cast<int>(i) < d - 1; ++i) {
      const Vec v = unit(modes[i].direction_at(s.time));
      Vec w = v - v.dot(n) * n;
      if (w.norm() < 1e-6) {
        throw SectionPlacement("mode " + std::to_string(i + 1) + " is tangent to the flow at section " +
                               std::to_string(k));
      }
      if (i == 0) lead = w.norm();
      s.mode_directions.col(static_cast<Eigen::Index>(i)) = w;
      for (const Vec& c : cols) w -= w.dot(c) * c;
      if (w.norm() > 1e-8) cols.push_back(unit(w));
    }
    complete_frame(cols, n, d - 1);
    s.frame = Mat(d, d - 1);
    for (int c = 0; c < d - 1; ++c) s.frame.col(c) = cols[static_cast<std::size_t>(c)];
    s.coord_map = d == 2 ? Mat(s.frame / lead) : s.frame;
    set.sections.push_back(std::move(s));
  }
  return set;
}

SectionSet place_sections(const PeriodicOrbit& orbit, const FloquetMode& mode, int p) {
  return place_sections(orbit, std::span<const FloquetMode>(&mode, 1), p);
}

double default_dt(double tau) { return tau / 20000.0; }

void simulate_sde(const SystemSpec& system, const Vec& x0, const SdeOptions& opt,
                  const PathObserver& observer) {
  if (opt.g < 0) throw InvalidParameter("noise amplitude must be non-negative");
  if (!(opt.dt > 0)) throw InvalidParameter("step size must be positive");
  const int d = system.dim();
  if (x0.size() != d) throw InvalidParameter("initial state has the wrong dimension");
  NoiseSource noise(opt.seed, opt.noise);
  const double scale = opt.g * std::sqrt(opt.dt);
  const long steps = static_cast<long>(std::ceil(opt.t_end / opt.dt - 1e-9));
  Vec x = x0;
  if (!observer(0, 0.0, x)) return;
  for (long j = 1; j <= steps; ++j) {
    const Vec f = system.field(x);
    for (int c = 0; c < d; ++c) x[c] = (x[c] + f[c] * opt.dt) + scale * noise.next();
    const double t = static_cast<double>(j) * opt.dt;
    const double r = x.norm();
    if (!(r <= opt.escape_radius)) throw TrajectoryEscape("sample path left the basin", t);
    if (!observer(j, t, x)) return;
  }
}

Vec SamplePath::state(std::size_t i) const {
  Vec x(dim);
  for (int c = 0; c < dim; ++c) x[c] = states[i * static_cast<std::size_t>(dim) + c];
  return x;
}

SamplePath simulate_path(const SystemSpec& system, const Vec& x0, const SdeOptions& opt) {
  SamplePath path;
  path.dim = system.dim();
  path.dt = opt.dt;
  simulate_sde(system, x0, opt, [&](long, double t, const Vec& x) {
    path.times.push_back(t);
    for (int c = 0; c < path.dim; ++c) path.states.push_back(x[c]);
    return true;
  });
  return path;
}

CrossingDetector::CrossingDetector(const SectionSet& sections, double gate_radius,
                                   double escape_radius)
    : sections_(&sections),
      gate_(gate_radius),
      escape_(escape_radius),
      dim_(sections.dim),
      p_(sections.p()) {
  if (p_ < 1) throw InvalidParameter("empty section set");
  series_.p = p_;
  series_.coord_dim = sections.coord_dim();
}

double CrossingDetector::signed_distance(int k, const double* x) const {
  const Section& s = sections_->sections[static_cast<std::size_t>(k)];
  double acc = 0.0;
  for (int c = 0; c < dim_; ++c) acc += (x[c] - s.base[c]) * s.normal[c];
  return acc;
}

void CrossingDetector::feed(double t, const Vec& x) { feed(t, x.data()); }

void CrossingDetector::feed(double t, const double* x) {
  double r2 = 0.0;
  for (int c = 0; c < dim_; ++c) r2 += x[c] * x[c];
  if (!(r2 <= escape_ * escape_)) throw TrajectoryEscape("sample path left the basin", t);
  if (!primed_) {
    primed_ = true;
    t_prev_ = t;
    last_crossing_ = t;
    std::copy(x, x + dim_, x_prev_.begin());
    return;
  }
  const int k = static_cast<int>(next_index_ % p_);
  const double* xp = x_prev_.data();

  auto in_gate = [&](int sec, double s0, double s1) {
    const double th = s0 / (s0 - s1);
    const Section& s = sections_->sections[static_cast<std::size_t>(sec)];
    double r = 0.0;
    for (int c = 0; c < dim_; ++c) {
      const double xc = xp[c] + th * (x[c] - xp[c]);
      r += (xc - s.base[c]) * (xc - s.base[c]);
    }
    return std::sqrt(r) <= gate_;
  };
  auto slip = [&] {
    throw CrossingSequence("section " + std::to_string(k) + " missed",
                           (next_index_ - 1) / p_);
  };

  // Distances to sections k, k-1, k+1; the previous sample's are cached
  // while the expected section is unchanged.
  const int prev = (k + p_ - 1) % p_;
  const int nxt = (k + 1) % p_;
  if (cached_section_ != k) {
    d_prev_ = {signed_distance(k, xp), signed_distance(prev, xp), signed_distance(nxt, xp)};
  }
  const std::array<double, 3> d_cur{signed_distance(k, x), p_ >= 2 ? signed_distance(prev, x) : 0.0,
                                    p_ >= 3 ? signed_distance(nxt, x) : 0.0};
  bool recorded = false;
  const double s0 = d_prev_[0];
  const double s1 = d_cur[0];
  if (s0 < 0.0 && s1 >= 0.0) {
    if (in_gate(k, s0, s1)) {
      record(k, t, x, s0, s1);
      recorded = true;
    } else {
      ++series_.discarded_out_of_gate;
    }
  }
  if (!recorded && p_ >= 2) {
    const double q0 = d_prev_[1];
    const double q1 = d_cur[1];
    if (q0 >= 0.0 && q1 < 0.0 && in_gate(prev, q0, q1)) {
      ++series_.discarded_out_of_order;
      behind_ = true;
    } else if (q0 < 0.0 && q1 >= 0.0 && in_gate(prev, q0, q1)) {
      if (behind_) {
        behind_ = false;
      } else if (p_ == 2) {
        slip();
      }
    }
    if (p_ >= 3) {
      const double u0 = d_prev_[2];
      const double u1 = d_cur[2];
      if (u0 < 0.0 && u1 >= 0.0 && in_gate(nxt, u0, u1)) slip();
    }
  }
  if (!recorded && t - last_crossing_ > sections_->tau) slip();
  d_prev_ = d_cur;
  cached_section_ = recorded ? -1 : k;
  t_prev_ = t;
  std::copy(x, x + dim_, x_prev_.begin());
}

void CrossingDetector::record(int k, double t, const double* x, double s_prev, double s_cur) {
  const double th = s_prev / (s_prev - s_cur);
  const Section& s = sections_->sections[static_cast<std::size_t>(k)];
  CrossingRecord rec;
  rec.index = next_index_;
  rec.section = k;
  rec.time = t_prev_ + th * (t - t_prev_);
  std::array<double, kMaxDim> dx{};
  for (int c = 0; c < dim_; ++c) dx[c] = (x_prev_[c] + th * (x[c] - x_prev_[c])) - s.base[c];
  for (int j = 0; j < dim_ - 1; ++j) {
    double acc = 0.0;
    for (int c = 0; c < dim_; ++c) acc += dx[c] * s.coord_map(c, j);
    rec.coords[j] = acc;
  }
  series_.records.push_back(rec);
  ++next_index_;
  behind_ = false;
  last_crossing_ = rec.time;
}

CrossingSeries detect_crossings(const SamplePath& path, const SectionSet& sections, double g,
                                double escape_radius) {
  CrossingDetector det(sections, sections.gate_radius(g), escape_radius);
  for (std::size_t i = 0; i < path.size(); ++i) {
    det.feed(path.times[i], path.states.data() + i * static_cast<std::size_t>(path.dim));
  }
  return det.take();
}

namespace {

double run_dt(const CrossingRun& run, double tau) {
  const double dt = run.dt > 0 ? run.dt : default_dt(tau);
  if (run.g < 0) throw InvalidParameter("noise amplitude must be non-negative");
  if (run.n_cycles < 1) throw InvalidParameter("n_cycles must be at least 1");
  return dt;
}

// Generous step budget: n_cycles revolutions plus slack for phase drift and
// for the Euler cycle's period differing from tau. Runs stop as soon as every
// crossing is recorded, so the slack costs nothing.
long step_budget(const CrossingRun& run, double tau, double dt) {
  return static_cast<long>(
      std::ceil((1.05 * static_cast<double>(run.n_cycles) + 2.0) * tau / dt));
}

}  // namespace

CrossingSeries simulate_crossings(const PeriodicOrbit& orbit, const SectionSet& sections,
                                  const CrossingRun& run, std::uint64_t seed) {
  const double dt = run_dt(run, orbit.tau);
  const long target = run.n_cycles * sections.p();
  CrossingDetector det(sections, sections.gate_radius(run.g),
                       run.escape_factor * sections.max_radius);
  SdeOptions opt;
  opt.g = run.g;
  opt.dt = dt;
  opt.t_end = static_cast<double>(step_budget(run, orbit.tau, dt)) * dt;
  opt.seed = seed;
  opt.noise = run.noise;
  simulate_sde(orbit.system, orbit.anchor, opt, [&](long, double t, const Vec& x) {
    det.feed(t, x);
    return det.crossings() < target;
  });
  if (det.crossings() < target) {
    throw CrossingSequence("step budget exhausted before all crossings were recorded",
                           det.crossings() / sections.p());
  }
  return det.take();
}

namespace {

struct Lane {
  NoiseSource noise;
  CrossingDetector detector;
  bool active = true;
  std::exception_ptr error;
};

}  // namespace

std::vector<LaneOutcome> simulate_crossings_ensemble(const PeriodicOrbit& orbit,
                                                     const SectionSet& sections,
                                                     const CrossingRun& run,
                                                     std::span<const std::uint64_t> seeds) {
  const double dt = run_dt(run, orbit.tau);
  const SystemSpec& sys = orbit.system;
  const int d = sys.dim();
  const std::size_t n = seeds.size();
  const long target = run.n_cycles * sections.p();
  const long budget = step_budget(run, orbit.tau, dt);
  const double scale = run.g * std::sqrt(dt);
  const double gate = sections.gate_radius(run.g);
  const double escape = run.escape_factor * sections.max_radius;
  const auto& kt = kernels::active();

  std::vector<Lane> lanes;
  lanes.reserve(n);
  for (std::size_t l = 0; l < n; ++l) {
    lanes.push_back(Lane{NoiseSource(seeds[l], run.noise), CrossingDetector(sections, gate, escape),
                         true, nullptr});
  }

  // Component-major (SoA) state and noise: comp c of lane l at [c * n + l].
  std::vector<double> state(static_cast<std::size_t>(d) * n), noise(state.size(), 0.0);
  std::vector<double> f;
  for (std::size_t l = 0; l < n; ++l) {
    for (int c = 0; c < d; ++c) state[c * n + l] = orbit.anchor[c];
  }
  std::array<double, kMaxDim> x{};
  auto feed = [&](std::size_t l, double t) {
    Lane& lane = lanes[l];
    for (int c = 0; c < d; ++c) x[c] = state[c * n + l];
    try {
      lane.detector.feed(t, x.data());
      if (lane.detector.crossings() >= target) lane.active = false;
    } catch (const Error&) {
      lane.error = std::current_exception();
      lane.active = false;
    }
  };
  for (std::size_t l = 0; l < n; ++l) feed(l, 0.0);

  auto col = [&](std::vector<double>& v, int c) {
    return std::span<double>(v.data() + static_cast<std::size_t>(c) * n, n);
  };
  auto ccol = [&](const std::vector<double>& v, int c) {
    return std::span<const double>(v.data() + static_cast<std::size_t>(c) * n, n);
  };

  std::size_t remaining = 0;
  for (const auto& lane : lanes) remaining += lane.active ? 1 : 0;
  for (long j = 1; j <= budget && remaining > 0; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      if (!lanes[l].active) {
        for (int c = 0; c < d; ++c) noise[c * n + l] = 0.0;
        continue;
      }
      for (int c = 0; c < d; ++c) noise[c * n + l] = lanes[l].noise.next();
    }
    if (sys.kind() == BuiltinKind::van_der_pol) {
      kt.vdp_em_step({col(state, 0), col(state, 1)}, {ccol(noise, 0), ccol(noise, 1)},
                     {sys.param("eps"), sys.param("a")}, dt, scale);
    } else if (sys.kind() == BuiltinKind::lorenz) {
      kt.lorenz_em_step({col(state, 0), col(state, 1), col(state, 2)},
                        {ccol(noise, 0), ccol(noise, 1), ccol(noise, 2)},
                        {sys.param("sigma"), sys.param("r"), sys.param("b")}, dt, scale);
    } else {
      f.assign(state.size(), 0.0);
      Vec xl(d);
      for (std::size_t l = 0; l < n; ++l) {
        for (int c = 0; c < d; ++c) xl[c] = state[c * n + l];
        const Vec fl = sys.field(xl);
        for (int c = 0; c < d; ++c) f[c * n + l] = fl[c];
      }
      kt.em_update(state, f, noise, dt, scale);
    }
    const double t = static_cast<double>(j) * dt;
    for (std::size_t l = 0; l < n; ++l) {
      if (!lanes[l].active) continue;
      feed(l, t);
      if (!lanes[l].active) --remaining;
    }
  }

  std::vector<LaneOutcome> out(n);
  for (std::size_t l = 0; l < n; ++l) {
    out[l].error = lanes[l].error;
    if (!out[l].error && lanes[l].detector.crossings() < target) {
      out[l].error = std::make_exception_ptr(
          CrossingSequence("step budget exhausted before all crossings were recorded",
                           lanes[l].detector.crossings() / sections.p()));
    }
    out[l].series = lanes[l].detector.take();
  }
  return out;
}

}  // namespace floquet
