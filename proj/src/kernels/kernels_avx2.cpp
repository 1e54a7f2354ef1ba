#include "rift/kernels/kernels.hpp"

#if !defined(RIFT_NO_AVX2_BUILD)

#include <immintrin.h>

#include <cstring>

namespace rift::kern {
namespace {

// ---------------------------------------------------------------- float32

void gemm_nn_f32_avx2(const float* a, const float* b, float* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(float));
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 av = _mm256_set1_ps(arow[p]);
      const float* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      const float as = arow[p];
      for (; j < n; ++j) crow[j] += as * brow[j];
    }
  }
}

inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, sums);
  sums = _mm_add_ss(sums, sh);
  return _mm_cvtss_f32(sums);
}

void gemm_nt_f32_avx2(const float* a, const float* b, float* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const float* brow = b + j * k;
      __m256 acc = _mm256_setzero_ps();
      std::size_t p = 0;
      for (; p + 8 <= k; p += 8) {
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                              _mm256_loadu_ps(brow + p), acc);
      }
      float sum = hsum256(acc);
      for (; p < k; ++p) sum += arow[p] * brow[p];
      crow[j] = sum;
    }
  }
}

void gemm_tn_f32_avx2(const float* a, const float* b, float* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(float));
  for (std::size_t p = 0; p < k; ++p) {
    const float* arow = a + p * m;
    const float* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const __m256 av = _mm256_set1_ps(arow[i]);
      float* crow = c + i * n;
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      const float as = arow[i];
      for (; j < n; ++j) crow[j] += as * brow[j];
    }
  }
}

// ---------------------------------------------------------------- float64

void gemm_nn_f64_avx2(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d av = _mm256_set1_pd(arow[p]);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d cv = _mm256_loadu_pd(crow + j);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv);
        _mm256_storeu_pd(crow + j, cv);
      }
      const double as = arow[p];
      for (; j < n; ++j) crow[j] += as * brow[j];
    }
  }
}

inline double hsum256d(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void gemm_nt_f64_avx2(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      __m256d acc = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p),
                              _mm256_loadu_pd(brow + p), acc);
      }
      double sum = hsum256d(acc);
      for (; p < k; ++p) sum += arow[p] * brow[p];
      crow[j] = sum;
    }
  }
}

void gemm_tn_f64_avx2(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const __m256d av = _mm256_set1_pd(arow[i]);
      double* crow = c + i * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d cv = _mm256_loadu_pd(crow + j);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv);
        _mm256_storeu_pd(crow + j, cv);
      }
      const double as = arow[i];
      for (; j < n; ++j) crow[j] += as * brow[j];
    }
  }
}

// ------------------------------------------------------------------ int8

// Must stay bit-identical to the scalar version: int8 -> f32 conversion is
// exact and the product rounds once, so widen + single multiply matches.
void dequant_i8_f32_avx2(const std::int8_t* q, float scale, float* out,
                         std::size_t n) {
  const __m256 sv = _mm256_set1_ps(scale);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i bytes =
        _mm_loadl_epi64(reinterpret_cast<const __m128i*>(q + i));
    const __m256i w = _mm256_cvtepi8_epi32(bytes);
    const __m256 f = _mm256_cvtepi32_ps(w);
    _mm256_storeu_ps(out + i, _mm256_mul_ps(f, sv));
  }
  for (; i < n; ++i) out[i] = static_cast<float>(q[i]) * scale;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table = {
      &gemm_nn_f32_avx2, &gemm_nt_f32_avx2, &gemm_tn_f32_avx2,
      &gemm_nn_f64_avx2, &gemm_nt_f64_avx2, &gemm_tn_f64_avx2,
      &dequant_i8_f32_avx2,
  };
  return table;
}

}  // namespace rift::kern

#endif  // !RIFT_NO_AVX2_BUILD
