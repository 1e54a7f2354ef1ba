#pragma once

#include <cstddef>
#include <cstdint>

// Dense inner-loop kernels behind the DUT forward/backward passes.
// Scalar reference implementations are always available; the AVX2 variants
// are selected at runtime when the CPU supports them. All matrices are
// row-major and the gemm routines overwrite C.
//
//   gemm_nn: C[m x n] = A[m x k] * B[k x n]
//   gemm_nt: C[m x n] = A[m x k] * B'[n x k]^T   (B stored row-major n x k)
//   gemm_tn: C[m x n] = A'[k x m]^T * B[k x n]   (A stored row-major k x m)
//   dequant: out[i] = float(q[i]) * scale        (single rounding per element)

namespace rift::kern {

enum class Backend { kScalar, kAvx2 };

const char* backend_name(Backend b);

struct KernelTable {
  void (*gemm_nn_f32)(const float* a, const float* b, float* c,
                      std::size_t m, std::size_t k, std::size_t n);
  void (*gemm_nt_f32)(const float* a, const float* b, float* c,
                      std::size_t m, std::size_t k, std::size_t n);
  void (*gemm_tn_f32)(const float* a, const float* b, float* c,
                      std::size_t m, std::size_t k, std::size_t n);
  void (*gemm_nn_f64)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
  void (*gemm_nt_f64)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
  void (*gemm_tn_f64)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
  void (*dequant_i8_f32)(const std::int8_t* q, float scale, float* out,
                         std::size_t n);
};

const KernelTable& scalar_kernels();
#if !defined(RIFT_NO_AVX2_BUILD)
const KernelTable& avx2_kernels();
#endif

bool backend_supported(Backend b);
Backend active_backend();
// Throws std::invalid_argument if the backend is not supported on this CPU.
void set_backend(Backend b);
// Picks the best supported backend (called implicitly on first use).
Backend autodetect_backend();

const KernelTable& kernels();

// Typed convenience wrappers used by the templated model code.
inline void gemm_nn(const float* a, const float* b, float* c,
                    std::size_t m, std::size_t k, std::size_t n) {
  kernels().gemm_nn_f32(a, b, c, m, k, n);
}
inline void gemm_nt(const float* a, const float* b, float* c,
                    std::size_t m, std::size_t k, std::size_t n) {
  kernels().gemm_nt_f32(a, b, c, m, k, n);
}
inline void gemm_tn(const float* a, const float* b, float* c,
                    std::size_t m, std::size_t k, std::size_t n) {
  kernels().gemm_tn_f32(a, b, c, m, k, n);
}
inline void gemm_nn(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
  kernels().gemm_nn_f64(a, b, c, m, k, n);
}
inline void gemm_nt(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
  kernels().gemm_nt_f64(a, b, c, m, k, n);
}
inline void gemm_tn(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
  kernels().gemm_tn_f64(a, b, c, m, k, n);
}
inline void dequant(const std::int8_t* q, float scale, float* out,
                    std::size_t n) {
  kernels().dequant_i8_f32(q, scale, out, n);
}

}  // namespace rift::kern
