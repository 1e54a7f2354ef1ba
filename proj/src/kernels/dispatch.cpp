#include "rift/kernels/kernels.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace rift::kern {
namespace {

bool cpu_has_avx2() {
#if defined(RIFT_NO_AVX2_BUILD)
  return false;
#elif defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<int> g_backend{-1};  // -1 = not yet detected

Backend detect() {
  return cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

}  // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
  }
  return "unknown";
}

bool backend_supported(Backend b) {
  if (b == Backend::kScalar) return true;
  return cpu_has_avx2();
}

Backend autodetect_backend() {
  const Backend b = detect();
  g_backend.store(static_cast<int>(b), std::memory_order_relaxed);
  return b;
}

Backend active_backend() {
  int cur = g_backend.load(std::memory_order_relaxed);
  if (cur < 0) return autodetect_backend();
  return static_cast<Backend>(cur);
}

void set_backend(Backend b) {
  if (!backend_supported(b)) {
    throw std::invalid_argument(std::string("kernel backend not supported on this CPU: ") +
                                backend_name(b));
  }
  g_backend.store(static_cast<int>(b), std::memory_order_relaxed);
}

const KernelTable& kernels() {
  switch (active_backend()) {
#if !defined(RIFT_NO_AVX2_BUILD)
    case Backend::kAvx2: return avx2_kernels();
#endif
    default: return scalar_kernels();
  }
}

}  // namespace rift::kern
