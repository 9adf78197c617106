#include "pipemdp/ode.hpp"

#include <algorithm>
#include <cmath>

#include "pipemdp/errors.hpp"
#include "pipemdp/kernels.hpp"

namespace pipemdp {

namespace {

// Dormand–Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21[] = {1.0 / 5};
constexpr double a3[] = {3.0 / 40, 9.0 / 40};
constexpr double a4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr double a5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
constexpr double a6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656};
// 5th-order weights (k2 weight is zero and omitted from the combination).
constexpr double b5[] = {35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84};
// Difference between 5th- and 4th-order weights over k1, k3, k4, k5, k6, k7.
constexpr double e[] = {71.0 / 57600, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

constexpr std::size_t kMaxSteps = 1'000'000;

}  // namespace

DormandPrince::DormandPrince(std::size_t dim, OdeTolerance tol)
    : dim_(dim), tol_(tol), stage_(dim), y5_(dim), err_(dim) {
  for (auto& k : k_) k.assign(dim, 0.0);
}

void DormandPrince::integrate(const Rhs& rhs, double t0, double t1, std::span<double> y) {
  if (y.size() != dim_) throw IntegrationError("state dimension mismatch");
  if (!(t1 >= t0)) throw IntegrationError("integration interval is reversed");
  accepted_ = 0;
  if (t1 == t0) return;

  const auto& kt = kernels::active();
  const std::size_t n = dim_;
  const double span_len = t1 - t0;
  double t = t0;
  double h = std::min(span_len, 0.05);
  std::size_t iterations = 0;

  rhs(t, y.data(), k_[0].data());
  while (t < t1) {
    if (++iterations > kMaxSteps) throw IntegrationError("step budget exhausted");
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }
    if (h <= 1e-14 * std::max(1.0, std::abs(t))) throw IntegrationError("step size underflow");

    const double* yk = y.data();
    {
      const double* terms[] = {k_[0].data()};
      kt.combine(stage_.data(), yk, h, a21, terms, 1, n);
      rhs(t + c2 * h, stage_.data(), k_[1].data());
    }
    {
      const double* terms[] = {k_[0].data(), k_[1].data()};
      kt.combine(stage_.data(), yk, h, a3, terms, 2, n);
      rhs(t + c3 * h, stage_.data(), k_[2].data());
    }
    {
      const double* terms[] = {k_[0].data(), k_[1].data(), k_[2].data()};
      kt.combine(stage_.data(), yk, h, a4, terms, 3, n);
      rhs(t + c4 * h, stage_.data(), k_[3].data());
    }
    {
      const double* terms[] = {k_[0].data(), k_[1].data(), k_[2].data(), k_[3].data()};
      kt.combine(stage_.data(), yk, h, a5, terms, 4, n);
      rhs(t + c5 * h, stage_.data(), k_[4].data());
    }
    {
      const double* terms[] = {k_[0].data(), k_[1].data(), k_[2].data(), k_[3].data(), k_[4].data()};
      kt.combine(stage_.data(), yk, h, a6, terms, 5, n);
      rhs(t + h, stage_.data(), k_[5].data());
    }
    {
      const double* terms[] = {k_[0].data(), k_[2].data(), k_[3].data(), k_[4].data(), k_[5].data()};
      kt.combine(y5_.data(), yk, h, b5, terms, 5, n);
      rhs(t + h, y5_.data(), k_[6].data());
    }
    {
      const double* terms[] = {k_[0].data(), k_[2].data(), k_[3].data(), k_[4].data(), k_[5].data(),
                               k_[6].data()};
      std::fill(stage_.begin(), stage_.end(), 0.0);
      kt.combine(err_.data(), stage_.data(), h, e, terms, 6, n);
    }

    double err_norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double scale = tol_.atol + tol_.rtol * std::max(std::abs(y[j]), std::abs(y5_[j]));
      err_norm = std::max(err_norm, std::abs(err_[j]) / scale);
    }
    if (!std::isfinite(err_norm)) {
      h *= 0.1;
      continue;
    }

    if (err_norm <= 1.0) {
      t = last ? t1 : t + h;
      std::copy(y5_.begin(), y5_.end(), y.begin());
      std::swap(k_[0], k_[6]);  // first-same-as-last
      ++accepted_;
      const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      if (!last) h *= factor;
      else h_ = h * factor;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
    }
  }
}

}  // namespace pipemdp
