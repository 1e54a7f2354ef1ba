#include "rift/kernels/kernels.hpp"

#include <cstring>

namespace rift::kern {
namespace {

template <typename Real>
void gemm_nn_impl(const Real* a, const Real* b, Real* c,
                  std::size_t m, std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(Real));
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    Real* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      const Real* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename Real>
void gemm_nt_impl(const Real* a, const Real* b, Real* c,
                  std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    Real* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* brow = b + j * k;
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
}

template <typename Real>
void gemm_tn_impl(const Real* a, const Real* b, Real* c,
                  std::size_t m, std::size_t k, std::size_t n) {
  // a stored k x m; c[i][j] = sum_p a[p][i] * b[p][j]
  std::memset(c, 0, m * n * sizeof(Real));
  for (std::size_t p = 0; p < k; ++p) {
    const Real* arow = a + p * m;
    const Real* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const Real av = arow[i];
      Real* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void dequant_impl(const std::int8_t* q, float scale, float* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = static_cast<float>(q[i]) * scale;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table = {
      &gemm_nn_impl<float>,  &gemm_nt_impl<float>,  &gemm_tn_impl<float>,
      &gemm_nn_impl<double>, &gemm_nt_impl<double>, &gemm_tn_impl<double>,
      &dequant_impl,
  };
  return table;
}

}  // namespace rift::kern
