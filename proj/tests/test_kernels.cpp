#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "pipemdp/kernels.hpp"

using namespace pipemdp::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& g, std::size_t n) {
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

bool bit_equal(const double* a, const double* b, std::size_t n) { return std::memcmp(a, b, n * sizeof(double)) == 0; }

}  // namespace

TEST_CASE("scalar matmul matches the definition") {
  std::mt19937_64 g(1);
  auto a = random_vec(g, kPadded);
  auto b = random_vec(g, kPadded);
  std::vector<double> c(kPadded);
  scalar().matmul8(a.data(), b.data(), c.data());
  for (int i = 0; i < kPad; ++i)
    for (int j = 0; j < kPad; ++j) {
      long double ref = 0;
      for (int k = 0; k < kPad; ++k) ref += static_cast<long double>(a[i * kPad + k]) * b[k * kPad + j];
      CHECK(c[i * kPad + j] == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
    }
}

TEST_CASE("scalar sample_rows counts thresholds") {
  // row 2: mass on severities 3, 4 and F
  std::vector<double> cdf(kPadded, 1.0);
  const double row[] = {0.0, 0.0, 0.5, 0.8, 0.8, 1.0};
  for (int j = 0; j < 6; ++j) cdf[2 * kPad + j] = row[j];
  const std::uint8_t from[] = {2, 2, 2, 2, 2};
  const double u[] = {0.0, 0.49, 0.5, 0.79, 0.95};
  std::uint8_t to[5];
  scalar().sample_rows(from, u, cdf.data(), to, 5);
  CHECK(to[0] == 2);
  CHECK(to[1] == 2);
  CHECK(to[2] == 3);
  CHECK(to[3] == 3);
  CHECK(to[4] == 5);
}

TEST_CASE("simd kernels are bit-identical to the scalar reference") {
  const KernelTable* simd = avx2();
  if (!simd) {
    MESSAGE("AVX2 unavailable; equivalence check skipped");
    return;
  }
  const KernelTable& ref = scalar();
  std::mt19937_64 g(2024);

  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_vec(g, kPadded);
    auto b = random_vec(g, kPadded);
    std::vector<double> c1(kPadded), c2(kPadded);
    ref.matmul8(a.data(), b.data(), c1.data());
    simd->matmul8(a.data(), b.data(), c2.data());
    CHECK(bit_equal(c1.data(), c2.data(), kPadded));

    std::vector<double> y1(kPad), y2(kPad);
    ref.vecmat8(a.data(), b.data(), y1.data());
    simd->vecmat8(a.data(), b.data(), y2.data());
    CHECK(bit_equal(y1.data(), y2.data(), kPad));

    for (std::size_t len : {std::size_t{8}, std::size_t{64}, std::size_t{13}}) {
      const std::size_t n_terms = 1 + trial % 6;
      std::vector<std::vector<double>> terms;
      std::vector<const double*> ptrs;
      for (std::size_t i = 0; i < n_terms; ++i) terms.push_back(random_vec(g, len));
      for (auto& t : terms) ptrs.push_back(t.data());
      auto coeff = random_vec(g, n_terms);
      auto base = random_vec(g, len);
      std::vector<double> o1(len), o2(len);
      ref.combine(o1.data(), base.data(), 0.37, coeff.data(), ptrs.data(), n_terms, len);
      simd->combine(o2.data(), base.data(), 0.37, coeff.data(), ptrs.data(), n_terms, len);
      CHECK(bit_equal(o1.data(), o2.data(), len));
    }

    // cumulative rows, upper-triangular support
    std::vector<double> cdf(kPadded, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 6; ++i) {
      double acc = 0.0;
      std::vector<double> w(6, 0.0);
      double total = 0.0;
      for (int j = i; j < 6; ++j) total += (w[j] = unif(g));
      for (int j = 0; j < 6; ++j) {
        acc += w[j] / total;
        cdf[i * kPad + j] = acc;
      }
      cdf[i * kPad + 5] = 1.0;
    }
    const std::size_t n = 97;
    std::vector<std::uint8_t> from(n), t1(n), t2(n);
    std::vector<double> u(n);
    for (std::size_t s = 0; s < n; ++s) {
      from[s] = static_cast<std::uint8_t>(g() % 6);
      u[s] = unif(g);
    }
    ref.sample_rows(from.data(), u.data(), cdf.data(), t1.data(), n);
    simd->sample_rows(from.data(), u.data(), cdf.data(), t2.data(), n);
    CHECK(t1 == t2);
    for (std::size_t s = 0; s < n; ++s) CHECK(t1[s] >= from[s]);
  }
}

TEST_CASE("active table is one of the known variants") {
  const auto& t = active();
  CHECK((t.name == "scalar" || t.name == "avx2"));
}
