#include "floquet/kernels.hpp"

#include <immintrin.h>

namespace floquet::kernels::avx2 {

namespace {

constexpr std::size_t kWidth = 4;

inline __m256d em(__m256d x, __m256d f, __m256d dt, __m256d scale, __m256d noise) {
  // (x + f*dt) + scale*noise, no contraction
  return _mm256_add_pd(_mm256_add_pd(x, _mm256_mul_pd(f, dt)), _mm256_mul_pd(scale, noise));
}

}  // namespace

void vdp_em_step(Lanes2 s, Noise2 w, VdpCoeffs c, double dt, double scale) {
  const std::size_t n = s.x.size();
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vscale = _mm256_set1_pd(scale);
  const __m256d veps = _mm256_set1_pd(c.eps);
  const __m256d va = _mm256_set1_pd(c.a);
  const __m256d three = _mm256_set1_pd(3.0);

  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d x = _mm256_loadu_pd(&s.x[i]);
    const __m256d y = _mm256_loadu_pd(&s.y[i]);
    __m256d cube = _mm256_mul_pd(x, x);
    cube = _mm256_mul_pd(cube, x);
    const __m256d fx =
        _mm256_div_pd(_mm256_add_pd(_mm256_sub_pd(y, _mm256_div_pd(cube, three)), x), veps);
    const __m256d fy = _mm256_sub_pd(va, x);
    _mm256_storeu_pd(&s.x[i], em(x, fx, vdt, vscale, _mm256_loadu_pd(&w.x[i])));
    _mm256_storeu_pd(&s.y[i], em(y, fy, vdt, vscale, _mm256_loadu_pd(&w.y[i])));
  }
  if (i < n) {
    scalar::vdp_em_step({s.x.subspan(i), s.y.subspan(i)}, {w.x.subspan(i), w.y.subspan(i)}, c,
                        dt, scale);
  }
}

void lorenz_em_step(Lanes3 s, Noise3 w, LorenzCoeffs c, double dt, double scale) {
  const std::size_t n = s.x.size();
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vscale = _mm256_set1_pd(scale);
  const __m256d sigma = _mm256_set1_pd(c.sigma);
  const __m256d r = _mm256_set1_pd(c.r);
  const __m256d b = _mm256_set1_pd(c.b);

  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d x = _mm256_loadu_pd(&s.x[i]);
    const __m256d y = _mm256_loadu_pd(&s.y[i]);
    const __m256d z = _mm256_loadu_pd(&s.z[i]);
    const __m256d fx = _mm256_mul_pd(sigma, _mm256_sub_pd(y, x));
    const __m256d fy =
        _mm256_sub_pd(_mm256_sub_pd(_mm256_mul_pd(r, x), y), _mm256_mul_pd(x, z));
    const __m256d fz = _mm256_sub_pd(_mm256_mul_pd(x, y), _mm256_mul_pd(b, z));
    _mm256_storeu_pd(&s.x[i], em(x, fx, vdt, vscale, _mm256_loadu_pd(&w.x[i])));
    _mm256_storeu_pd(&s.y[i], em(y, fy, vdt, vscale, _mm256_loadu_pd(&w.y[i])));
    _mm256_storeu_pd(&s.z[i], em(z, fz, vdt, vscale, _mm256_loadu_pd(&w.z[i])));
  }
  if (i < n) {
    scalar::lorenz_em_step({s.x.subspan(i), s.y.subspan(i), s.z.subspan(i)},
                           {w.x.subspan(i), w.y.subspan(i), w.z.subspan(i)}, c, dt, scale);
  }
}

void em_update(std::span<double> x, std::span<const double> f, std::span<const double> noise,
               double dt, double scale) {
  const std::size_t n = x.size();
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vscale = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d v = em(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&f[i]), vdt, vscale,
                         _mm256_loadu_pd(&noise[i]));
    _mm256_storeu_pd(&x[i], v);
  }
  if (i < n) scalar::em_update(x.subspan(i), f.subspan(i), noise.subspan(i), dt, scale);
}

}  // namespace floquet::kernels::avx2
