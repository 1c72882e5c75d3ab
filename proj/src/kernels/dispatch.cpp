#include "floquet/errors.hpp"
#include "floquet/kernels.hpp"

#include <atomic>
#include <string>

namespace floquet::kernels {

namespace {

constexpr KernelTable kScalar{Backend::scalar, &scalar::vdp_em_step, &scalar::lorenz_em_step,
                              &scalar::em_update};

#ifdef FLOQUET_HAVE_AVX2
constexpr KernelTable kAvx2{Backend::avx2, &avx2::vdp_em_step, &avx2::lorenz_em_step,
                            &avx2::em_update};
#endif

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{&kernels::table(best_backend())};
  return table;
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend b) noexcept {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#ifdef FLOQUET_HAVE_AVX2
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Backend best_backend() noexcept {
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

const KernelTable& table(Backend b) {
  if (!backend_available(b)) {
    throw InvalidParameter("kernel backend '" + std::string(backend_name(b)) +
                           "' is not available on this machine");
  }
#ifdef FLOQUET_HAVE_AVX2
  if (b == Backend::avx2) return kAvx2;
#endif
  return kScalar;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void set_backend(Backend b) { current().store(&table(b), std::memory_order_release); }

}  // namespace floquet::kernels
