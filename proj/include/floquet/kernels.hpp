#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel Euler-Maruyama stepping across independent realizations.
// Lanes are stored structure-of-arrays; every backend performs the same IEEE
// operations in the same order per lane, so results are bit-identical to the
// scalar reference (the library is built with -ffp-contract=off).

namespace floquet::kernels {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b) noexcept;

struct VdpCoeffs {
  double eps;
  double a;
};

struct LorenzCoeffs {
  double sigma;
  double r;
  double b;
};

/// Lane-local state for a 2D system: x[i], y[i] belong to lane i.
struct Lanes2 {
  std::span<double> x, y;
};
struct Noise2 {
  std::span<const double> x, y;
};
struct Lanes3 {
  std::span<double> x, y, z;
};
struct Noise3 {
  std::span<const double> x, y, z;
};

// state <- state + field(state) * dt + scale * noise
using VdpStepFn = void (*)(Lanes2 s, Noise2 w, VdpCoeffs c, double dt, double scale);
using LorenzStepFn = void (*)(Lanes3 s, Noise3 w, LorenzCoeffs c, double dt, double scale);
// x <- x + f * dt + scale * noise, elementwise
using EmUpdateFn = void (*)(std::span<double> x, std::span<const double> f,
                            std::span<const double> noise, double dt, double scale);

struct KernelTable {
  Backend backend;
  VdpStepFn vdp_em_step;
  LorenzStepFn lorenz_em_step;
  EmUpdateFn em_update;
};

bool backend_available(Backend b) noexcept;
Backend best_backend() noexcept;

/// The table currently used by the ensemble simulator.
const KernelTable& active() noexcept;
const KernelTable& table(Backend b);
/// Raises InvalidParameter if `b` is not supported by this CPU/build.
void set_backend(Backend b);

// Single-lane field formulas shared by SystemSpec and the scalar kernels.
inline void vdp_field(double x, double y, const VdpCoeffs& c, double& fx, double& fy) noexcept {
  double cube = x * x;
  cube = cube * x;
  fx = ((y - cube / 3.0) + x) / c.eps;
  fy = c.a - x;
}

inline void lorenz_field(double x, double y, double z, const LorenzCoeffs& c, double& fx,
                         double& fy, double& fz) noexcept {
  fx = c.sigma * (y - x);
  fy = ((c.r * x) - y) - (x * z);
  fz = (x * y) - (c.b * z);
}

namespace scalar {
void vdp_em_step(Lanes2 s, Noise2 w, VdpCoeffs c, double dt, double scale);
void lorenz_em_step(Lanes3 s, Noise3 w, LorenzCoeffs c, double dt, double scale);
void em_update(std::span<double> x, std::span<const double> f, std::span<const double> noise,
               double dt, double scale);
}  // namespace scalar

namespace avx2 {
void vdp_em_step(Lanes2 s, Noise2 w, VdpCoeffs c, double dt, double scale);
void lorenz_em_step(Lanes3 s, Noise3 w, LorenzCoeffs c, double dt, double scale);
void em_update(std::span<double> x, std::span<const double> f, std::span<const double> noise,
               double dt, double scale);
}  // namespace avx2

}  // namespace floquet::kernels
