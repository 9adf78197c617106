#pragma once

// Reference computations that do not share code with the library's solver
// path. Used to freeze expected values and cross-check the integrators.

#include <array>
#include <cmath>

namespace oracle {

using Mat = std::array<std::array<long double, 6>, 6>;

inline Mat identity() {
  Mat m{};
  for (int i = 0; i < 6; ++i) m[i][i] = 1.0L;
  return m;
}

inline Mat mul(const Mat& a, const Mat& b) {
  Mat c{};
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 6; ++k)
      for (int j = 0; j < 6; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// exp(Q t) by the plain Taylor series, stopped once every entry of the
/// current term is below `cutoff` (and the terms are past their peak).
inline Mat expm_series(const Mat& q, long double t, long double cutoff = 1e-12L) {
  Mat a{};
  long double norm = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      a[i][j] = q[i][j] * t;
      norm = std::max(norm, std::fabs(a[i][j]));
    }
  Mat sum = identity();
  Mat term = identity();
  for (int n = 1; n < 2000; ++n) {
    term = mul(term, a);
    long double biggest = 0;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        term[i][j] /= n;
        sum[i][j] += term[i][j];
        biggest = std::max(biggest, std::fabs(term[i][j]));
      }
    if (biggest < cutoff && n > 6 * norm) break;
  }
  return sum;
}

// Closed forms of the three hazard laws.
inline double exponential_rate(double eps, double) { return eps; }
inline double gompertz_rate(double alpha, double beta, double t) { return alpha * beta * std::exp(beta * t); }
inline double weibull_rate(double eta, double rho, double t) { return rho / eta * std::pow(t / eta, rho - 1.0); }

/// Occupancy by fixed-step classical RK4 on the master equation with a
/// caller-supplied generator. Independent of the adaptive solver.
template <typename RateFn>
std::array<double, 6> occupancy_rk4(const std::array<double, 6>& s0, RateFn rates, double t_end, int steps) {
  std::array<long double, 6> y{};
  for (int k = 0; k < 6; ++k) y[k] = s0[k];
  const long double h = t_end / steps;
  auto f = [&](long double t, const std::array<long double, 6>& s) {
    const Mat q = rates(static_cast<double>(t));
    std::array<long double, 6> d{};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) d[j] += s[i] * q[i][j];
    return d;
  };
  for (int n = 0; n < steps; ++n) {
    const long double t = n * h;
    auto k1 = f(t, y);
    std::array<long double, 6> tmp{};
    for (int k = 0; k < 6; ++k) tmp[k] = y[k] + h / 2 * k1[k];
    auto k2 = f(t + h / 2, tmp);
    for (int k = 0; k < 6; ++k) tmp[k] = y[k] + h / 2 * k2[k];
    auto k3 = f(t + h / 2, tmp);
    for (int k = 0; k < 6; ++k) tmp[k] = y[k] + h * k3[k];
    auto k4 = f(t + h, tmp);
    for (int k = 0; k < 6; ++k) y[k] += h / 6 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
  }
  std::array<double, 6> out{};
  for (int k = 0; k < 6; ++k) out[k] = static_cast<double>(y[k]);
  return out;
}

// RK4 in u = ln t from t0 to t_end; dS/du = t S Q(t). Keeps stiff t^(rho-1) poles bounded.
template <class RateFn>
std::array<double, 6> occupancy_rk4_log(const std::array<long double, 6>& s0, RateFn rates, double t0, double t_end,
                                        int steps) {
  std::array<long double, 6> y = s0;
  const long double u0 = std::log(static_cast<long double>(t0));
  const long double h = (std::log(static_cast<long double>(t_end)) - u0) / steps;
  auto f = [&](long double u, const std::array<long double, 6>& s) {
    const long double t = std::exp(u);
    const Mat q = rates(static_cast<double>(t));
    std::array<long double, 6> d{};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) d[j] += t * s[i] * q[i][j];
    return d;
  };
  for (int n = 0; n < steps; ++n) {
    const long double u = u0 + n * h;
    auto k1 = f(u, y);
    std::array<long double, 6> tmp{};
    for (int k = 0; k < 6; ++k) tmp[k] = y[k] + h / 2 * k1[k];
    auto k2 = f(u + h / 2, tmp);
    for (int k = 0; k < 6; ++k) tmp[k] = y[k] + h / 2 * k2[k];
    auto k3 = f(u + h / 2, tmp);
    for (int k = 0; k < 6; ++k) tmp[k] = y[k] + h * k3[k];
    auto k4 = f(u + h, tmp);
    for (int k = 0; k < 6; ++k) y[k] += h / 6 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
  }
  std::array<double, 6> out{};
  for (int k = 0; k < 6; ++k) out[k] = static_cast<double>(y[k]);
  return out;
}

}  // namespace oracle
