#include "kernels_impl.hpp"

namespace pipemdp::kernels {

namespace {

void matmul8_scalar(const double* a, const double* b, double* c) {
  for (int i = 0; i < kPad; ++i) {
    double acc[kPad] = {};
    for (int k = 0; k < kPad; ++k) {
      const double aik = a[i * kPad + k];
      for (int j = 0; j < kPad; ++j) acc[j] = acc[j] + aik * b[k * kPad + j];
    }
    for (int j = 0; j < kPad; ++j) c[i * kPad + j] = acc[j];
  }
}

void vecmat8_scalar(const double* x, const double* m, double* y) {
  double acc[kPad] = {};
  for (int k = 0; k < kPad; ++k) {
    const double xk = x[k];
    for (int j = 0; j < kPad; ++j) acc[j] = acc[j] + xk * m[k * kPad + j];
  }
  for (int j = 0; j < kPad; ++j) y[j] = acc[j];
}

void combine_scalar(double* out, const double* base, double h, const double* coeff,
                    const double* const* terms, std::size_t n_terms, std::size_t len) {
  for (std::size_t j = 0; j < len; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_terms; ++i) acc = acc + coeff[i] * terms[i][j];
    out[j] = base[j] + h * acc;
  }
}

void sample_rows_scalar(const std::uint8_t* from, const double* u, const double* cdf,
                        std::uint8_t* to, std::size_t n) {
  for (std::size_t s = 0; s < n; ++s) {
    const double* row = cdf + from[s] * kPad;
    std::uint8_t next = 0;
    for (int j = 0; j < 5; ++j) next += row[j] <= u[s] ? 1 : 0;
    to[s] = next;
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar", matmul8_scalar, vecmat8_scalar, combine_scalar,
                                 sample_rows_scalar};
  return table;
}

}  // namespace pipemdp::kernels
