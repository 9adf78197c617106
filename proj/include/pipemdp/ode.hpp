#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pipemdp {

struct OdeTolerance {
  double rtol = 1e-10;
  double atol = 1e-12;
};

/// Adaptive Dormand–Prince 5(4) integrator with embedded error control.
///
/// Advances y in place from t0 to t1 (t1 >= t0). The right-hand side is
/// called as rhs(t, y, dydt) with spans of y.size() elements. Stage
/// combinations run through the active kernel table. Throws
/// IntegrationError when the step size underflows or the step budget is
/// exhausted.
class DormandPrince {
 public:
  using Rhs = std::function<void(double, const double*, double*)>;

  explicit DormandPrince(std::size_t dim, OdeTolerance tol = {});

  void integrate(const Rhs& rhs, double t0, double t1, std::span<double> y);

  // Step size suggested at the end of the last integrate() call.
  double last_step() const { return h_; }
  std::size_t accepted_steps() const { return accepted_; }

 private:
  std::size_t dim_;
  OdeTolerance tol_;
  double h_ = 0.0;
  std::size_t accepted_ = 0;
  std::vector<double> k_[7];
  std::vector<double> stage_;
  std::vector<double> y5_;
  std::vector<double> err_;
};

}  // namespace pipemdp
