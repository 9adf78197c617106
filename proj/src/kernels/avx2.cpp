#include "kernels_impl.hpp"

#if defined(PIPEMDP_HAVE_AVX2)

#include <immintrin.h>

namespace pipemdp::kernels {

namespace {

void matmul8_avx2(const double* a, const double* b, double* c) {
  for (int i = 0; i < kPad; ++i) {
    __m256d lo = _mm256_setzero_pd();
    __m256d hi = _mm256_setzero_pd();
    for (int k = 0; k < kPad; ++k) {
      const __m256d aik = _mm256_set1_pd(a[i * kPad + k]);
      lo = _mm256_add_pd(lo, _mm256_mul_pd(aik, _mm256_loadu_pd(b + k * kPad)));
      hi = _mm256_add_pd(hi, _mm256_mul_pd(aik, _mm256_loadu_pd(b + k * kPad + 4)));
    }
    _mm256_storeu_pd(c + i * kPad, lo);
    _mm256_storeu_pd(c + i * kPad + 4, hi);
  }
}

void vecmat8_avx2(const double* x, const double* m, double* y) {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  for (int k = 0; k < kPad; ++k) {
    const __m256d xk = _mm256_set1_pd(x[k]);
    lo = _mm256_add_pd(lo, _mm256_mul_pd(xk, _mm256_loadu_pd(m + k * kPad)));
    hi = _mm256_add_pd(hi, _mm256_mul_pd(xk, _mm256_loadu_pd(m + k * kPad + 4)));
  }
  _mm256_storeu_pd(y, lo);
  _mm256_storeu_pd(y + 4, hi);
}

void combine_avx2(double* out, const double* base, double h, const double* coeff,
                  const double* const* terms, std::size_t n_terms, std::size_t len) {
  const __m256d hv = _mm256_set1_pd(h);
  std::size_t j = 0;
  for (; j + 4 <= len; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n_terms; ++i) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(coeff[i]), _mm256_loadu_pd(terms[i] + j)));
    }
    _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(base + j), _mm256_mul_pd(hv, acc)));
  }
  for (; j < len; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_terms; ++i) acc = acc + coeff[i] * terms[i][j];
    out[j] = base[j] + h * acc;
  }
}

void sample_rows_avx2(const std::uint8_t* from, const double* u, const double* cdf,
                      std::uint8_t* to, std::size_t n) {
  for (std::size_t s = 0; s < n; ++s) {
    const double* row = cdf + from[s] * kPad;
    const __m256d uv = _mm256_set1_pd(u[s]);
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(row), uv, _CMP_LE_OQ));
    to[s] = static_cast<std::uint8_t>(__builtin_popcount(static_cast<unsigned>(mask)) + (row[4] <= u[s] ? 1 : 0));
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", matmul8_avx2, vecmat8_avx2, combine_avx2, sample_rows_avx2};
  return &table;
}

}  // namespace pipemdp::kernels

#else

namespace pipemdp::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace pipemdp::kernels

#endif
