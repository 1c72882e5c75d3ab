#pragma once

#include "floquet/dynsys.hpp"
#include "floquet/orbit.hpp"
#include "floquet/stochsim.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace floquet {

/// Everything later stages need from an orbit solve. Numbers are written at
/// full precision, so a record read back rebuilds the same orbit bit for bit.
struct OrbitRecord {
  std::string system;
  ParamMap params;
  double tau = 0.0;
  Vec anchor;
  double tol = kOrbitTol;
  Multipliers multipliers;
  double trace_integral = 0.0;
  std::vector<FloquetMode> modes;
};

OrbitRecord make_orbit_record(const PeriodicOrbit& orbit, std::vector<FloquetMode> modes);

/// Re-integrates the cycle from the recorded anchor and period (no shooting).
PeriodicOrbit rebuild_orbit(const OrbitRecord& record);

// Text layout: a header of `key value...` lines, then per mode a `mode`
// block whose grid rows are t, log|phi|, sign, direction components.
void write_orbit_record(const OrbitRecord& record, std::ostream& out);
void write_orbit_record(const OrbitRecord& record, const std::filesystem::path& path);
/// Malformed or missing input raises UsageError.
OrbitRecord read_orbit_record(std::istream& in);
OrbitRecord read_orbit_record(const std::filesystem::path& path);

// Header lines (p, coord_dim, discard counters), then one row per crossing:
// index, section, time, coordinates.
void write_crossing_series(const CrossingSeries& series, std::ostream& out);
void write_crossing_series(const CrossingSeries& series, const std::filesystem::path& path);
CrossingSeries read_crossing_series(std::istream& in);
CrossingSeries read_crossing_series(const std::filesystem::path& path);

}  // namespace floquet
