#include "floquet/kernels.hpp"

namespace floquet::kernels::scalar {

void vdp_em_step(Lanes2 s, Noise2 w, VdpCoeffs c, double dt, double scale) {
  const std::size_t n = s.x.size();
  for (std::size_t i = 0; i < n; ++i) {
    double fx, fy;
    vdp_field(s.x[i], s.y[i], c, fx, fy);
    s.x[i] = (s.x[i] + fx * dt) + scale * w.x[i];
    s.y[i] = (s.y[i] + fy * dt) + scale * w.y[i];
  }
}

void lorenz_em_step(Lanes3 s, Noise3 w, LorenzCoeffs c, double dt, double scale) {
  const std::size_t n = s.x.size();
  for (std::size_t i = 0; i < n; ++i) {
    double fx, fy, fz;
    lorenz_field(s.x[i], s.y[i], s.z[i], c, fx, fy, fz);
    s.x[i] = (s.x[i] + fx * dt) + scale * w.x[i];
    s.y[i] = (s.y[i] + fy * dt) + scale * w.y[i];
    s.z[i] = (s.z[i] + fz * dt) + scale * w.z[i];
  }
}

void em_update(std::span<double> x, std::span<const double> f, std::span<const double> noise,
               double dt, double scale) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] + f[i] * dt) + scale * noise[i];
}

}  // namespace floquet::kernels::scalar
