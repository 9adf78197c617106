#pragma once

// Data-parallel inner loops of the solver and the segment sampler.
//
// Every kernel has a scalar reference implementation and, where the CPU
// supports it, an AVX2 variant chosen at runtime. The variants use the same
// operation order and no fused multiply-add, so their results are
// bit-identical to the reference.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace pipemdp::kernels {

// Square matrices are stored row-major and padded to 8x8 doubles.
inline constexpr int kPad = 8;
inline constexpr int kPadded = kPad * kPad;

struct KernelTable {
  std::string_view name;

  // c = a * b for padded 8x8 matrices. c must not alias a or b.
  void (*matmul8)(const double* a, const double* b, double* c);

  // y = x * m, x and y of length 8. y must not alias x.
  void (*vecmat8)(const double* x, const double* m, double* y);

  // out[j] = base[j] + h * sum_i coeff[i] * terms[i][j], summed in order i = 0..n-1.
  void (*combine)(double* out, const double* base, double h, const double* coeff,
                  const double* const* terms, std::size_t n_terms, std::size_t len);

  // Next severity of each segment: to[s] = number of j in [0, 5) with
  // cdf[from[s] * 8 + j] <= u[s]. Row entries past index 4 are treated as 1.
  void (*sample_rows)(const std::uint8_t* from, const double* u, const double* cdf,
                      std::uint8_t* to, std::size_t n);
};

const KernelTable& scalar();

// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2();

// Kernel table used by the library. AVX2 when available unless the
// PIPEMDP_KERNELS environment variable is set to "scalar".
const KernelTable& active();

}  // namespace pipemdp::kernels
