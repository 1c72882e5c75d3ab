#pragma once

#include "floquet/dynsys.hpp"
#include "floquet/orbit.hpp"

#include <array>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <span>
#include <vector>

namespace floquet {

enum class NoiseKind { gaussian, laplace };

NoiseKind parse_noise_kind(std::string_view text);
std::string_view noise_kind_name(NoiseKind kind) noexcept;

/// Unit-variance isotropic increments, one engine per sample path.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, NoiseKind kind) : engine_(seed), kind_(kind) {}
  double next();

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  NoiseKind kind_;
};

struct Section {
  double time = 0.0;
  Vec base;
  /// Unit normal of the section hyperplane, oriented along the flow.
  Vec normal;
  /// Orthonormal transverse frame, dim x (dim - 1).
  Mat frame;
  /// Unit nontrivial mode vectors orthogonally projected into the section,
  /// dim x (dim - 1), in multiplier order.
  Mat mode_directions;
  /// Recorded coordinates are coord_map^T (x - base). In 2D this is the mode
  /// amplitude (frame / <mode, frame>); otherwise it equals the frame.
  Mat coord_map;
};

struct SectionSet {
  int dim = 0;
  double tau = 0.0;
  /// Bounding-box diagonal of the orbit.
  double diameter = 0.0;
  /// max |gamma(t)|.
  double max_radius = 0.0;
  std::vector<Section> sections;

  int p() const noexcept { return static_cast<int>(sections.size()); }
  int coord_dim() const noexcept { return dim - 1; }
  double gate_radius(double g) const;
};

/// p sections at t_k = k tau / p, each normal to the flow at its base point.
/// The frame starts with the leading mode direction projected into the
/// section. `modes` lists the nontrivial modes in multiplier order.
SectionSet place_sections(const PeriodicOrbit& orbit, std::span<const FloquetMode> modes, int p);
SectionSet place_sections(const PeriodicOrbit& orbit, const FloquetMode& mode, int p);

/// Default Euler-Maruyama step: tau / 20000.
double default_dt(double tau);

struct SdeOptions {
  double g = 0.0;
  double dt = 1e-3;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  NoiseKind noise = NoiseKind::gaussian;
  double escape_radius = std::numeric_limits<double>::infinity();
};

/// Called with (step, t, x) for the initial state and after every step;
/// returning false stops the simulation.
using PathObserver = std::function<bool(long, double, const Vec&)>;

/// x_{j+1} = (x_j + f(x_j) dt) + g sqrt(dt) eta_j. Components of eta_j are
/// drawn in index order. Raises TrajectoryEscape if |x| exceeds the escape
/// radius or becomes non-finite.
void simulate_sde(const SystemSpec& system, const Vec& x0, const SdeOptions& opt,
                  const PathObserver& observer);

struct SamplePath {
  int dim = 0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> states;  // row-major, dim per sample

  std::size_t size() const noexcept { return times.size(); }
  Vec state(std::size_t i) const;
};

SamplePath simulate_path(const SystemSpec& system, const Vec& x0, const SdeOptions& opt);

inline constexpr int kMaxCoords = kMaxDim - 1;

struct CrossingRecord {
  long index = 0;
  int section = 0;
  double time = 0.0;
  std::array<double, kMaxCoords> coords{};
};

struct CrossingSeries {
  int p = 0;
  int coord_dim = 0;
  std::vector<CrossingRecord> records;
  /// Hyperplane crossings of the expected section outside the gate.
  long discarded_out_of_gate = 0;
  /// In-gate backward re-crossings of the section just passed.
  long discarded_out_of_order = 0;

  std::size_t size() const noexcept { return records.size(); }
};

/// Streaming crossing detector. The path starts at (or near) section 0's base
/// point at t = 0; that starting point is not recorded, so the first record
/// has global index 1 on section 1 mod p.
class CrossingDetector {
 public:
  CrossingDetector(const SectionSet& sections, double gate_radius, double escape_radius);

  /// Feeds the next sample. Raises TrajectoryEscape or CrossingSequence.
  void feed(double t, const Vec& x);
  void feed(double t, const double* x);

  const CrossingSeries& series() const noexcept { return series_; }
  CrossingSeries take() { return std::move(series_); }
  long crossings() const noexcept { return static_cast<long>(series_.records.size()); }

 private:
  double signed_distance(int k, const double* x) const;
  void record(int k, double t, const double* x, double s_prev, double s_cur);

  const SectionSet* sections_;
  double gate_;
  double escape_;
  int dim_;
  int p_;
  long next_index_ = 1;
  double last_crossing_ = 0.0;
  bool primed_ = false;
  bool behind_ = false;
  double t_prev_ = 0.0;
  std::array<double, kMaxDim> x_prev_{};
  int cached_section_ = -1;
  std::array<double, 3> d_prev_{};
  CrossingSeries series_;
};

CrossingSeries detect_crossings(const SamplePath& path, const SectionSet& sections, double g,
                                double escape_radius = std::numeric_limits<double>::infinity());

struct CrossingRun {
  double g = 0.0;
  double dt = 0.0;  // 0 selects default_dt
  long n_cycles = 100;
  NoiseKind noise = NoiseKind::gaussian;
  /// Scale of the escape radius in units of max |gamma|.
  double escape_factor = 10.0;
};

/// Simulates from the anchor until n_cycles * p crossings are recorded
/// (scalar reference path).
CrossingSeries simulate_crossings(const PeriodicOrbit& orbit, const SectionSet& sections,
                                  const CrossingRun& run, std::uint64_t seed);

struct LaneOutcome {
  CrossingSeries series;
  /// Set if the lane raised (escape, cycle slip).
  std::exception_ptr error;
};

/// Runs one realization per seed in lockstep using the active SIMD backend.
/// Each lane is bit-identical to simulate_crossings with the same seed.
std::vector<LaneOutcome> simulate_crossings_ensemble(const PeriodicOrbit& orbit,
                                                     const SectionSet& sections,
                                                     const CrossingRun& run,
                                                     std::span<const std::uint64_t> seeds);

}  // namespace floquet
