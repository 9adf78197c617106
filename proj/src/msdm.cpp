#include "pipemdp/msdm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>

#include "pipemdp/errors.hpp"
#include "pipemdp/kernels.hpp"

namespace pipemdp {

namespace {

using kernels::kPad;
using kernels::kPadded;

// Largest negative entry tolerated as integration noise before clamping.
constexpr double kClampLimit = 1e-9;

void fill_padded_rates(const DegradationModel& model, double t, double* q) {
  std::fill(q, q + kPadded, 0.0);
  const double age = std::max(t, kMinHazardAge);
  for (int e = 0; e < kEdgeCount; ++e) {
    const auto edge = static_cast<Edge>(e);
    const double r = model.hazards().rate(edge, age);
    const int i = index_of(edge_from(edge));
    const int j = index_of(edge_to(edge));
    q[i * kPad + j] = r;
    q[i * kPad + i] -= r;
  }
}

}  // namespace

StateMatrix StateMatrix::identity() {
  StateMatrix m;
  for (int i = 0; i < kStates; ++i) m(i, i) = 1.0;
  return m;
}

DegradationModel::DegradationModel(HazardTable hazards, SeverityVector initial, std::string label)
    : hazards_(std::move(hazards)), initial_(initial), label_(std::move(label)) {
  double total = 0.0;
  for (double p : initial_) {
    if (!(p >= 0.0)) throw DomainError("initial distribution has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("initial distribution must sum to 1");
}

DegradationModel DegradationModel::from_cohort(const CohortParameters& params) {
  return {params.hazards, params.initial, std::string(to_string(params.family))};
}

DegradationModel DegradationModel::builtin(HazardFamily family) { return from_cohort(builtin_cmw(family)); }

DegradationModel DegradationModel::zero_rate(SeverityVector initial) {
  return {HazardTable{}, initial, "zero"};
}

StateMatrix DegradationModel::rate_matrix(double t) const {
  if (!(t >= 0.0)) throw DomainError("rate matrix requested at negative age");
  StateMatrix q;
  for (int e = 0; e < kEdgeCount; ++e) {
    const auto edge = static_cast<Edge>(e);
    const double r = hazards_.rate(edge, t);
    const int i = index_of(edge_from(edge));
    q(i, index_of(edge_to(edge))) = r;
  }
  for (int i = 0; i < kStates; ++i) {
    double off = 0.0;
    for (int j = 0; j < kStates; ++j) {
      if (j != i) off += q(i, j);
    }
    q(i, i) = -off;
  }
  return q;
}

namespace {

class OccupancySolver {
 public:
  OccupancySolver(const DegradationModel& model, OdeTolerance tol) : model_(model), ode_(kPad, tol) {
    std::copy(model.initial().begin(), model.initial().end(), y_.begin());
  }

  void advance_to(double t) {
    if (t > t_) {
      const auto& kt = kernels::active();
      ode_.integrate(
          [&](double s, const double* y, double* dy) {
            fill_padded_rates(model_, s, q_.data());
            kt.vecmat8(y, q_.data(), dy);
          },
          t_, t, y_);
      t_ = t;
    }
  }

  SeverityVector value() const {
    SeverityVector s{};
    std::copy(y_.begin(), y_.begin() + kStates, s.begin());
    return s;
  }

 private:
  const DegradationModel& model_;
  DormandPrince ode_;
  std::array<double, kPad> y_{};
  std::array<double, kPadded> q_{};
  double t_ = 0.0;
};

}  // namespace

OccupancyCurve solve_occupancy(const DegradationModel& model, double t_end, double grid_step, OdeTolerance tol) {
  if (!(t_end >= 0.0)) throw DomainError("t_end must be >= 0");
  if (!(grid_step > 0.0)) throw DomainError("grid step must be > 0");

  OccupancyCurve curve;
  const auto n = static_cast<std::size_t>(std::floor(t_end / grid_step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) curve.times.push_back(static_cast<double>(i) * grid_step);
  if (t_end - curve.times.back() > 1e-9 * std::max(1.0, t_end)) curve.times.push_back(t_end);

  OccupancySolver solver(model, tol);
  curve.values.reserve(curve.times.size());
  for (double t : curve.times) {
    solver.advance_to(t);
    curve.values.push_back(solver.value());
  }
  return curve;
}

SeverityVector occupancy_at(const DegradationModel& model, double t, OdeTolerance tol) {
  if (!(t >= 0.0)) throw DomainError("occupancy requested at negative age");
  OccupancySolver solver(model, tol);
  solver.advance_to(t);
  return solver.value();
}

StateMatrix interval_transition_matrix(const DegradationModel& model, double t, double dt, OdeTolerance tol) {
  if (!(t >= 0.0)) throw DomainError("transition matrix requested at negative age");
  if (!(dt > 0.0)) throw DomainError("transition interval must be > 0");

  std::array<double, kPadded> p{};
  for (int i = 0; i < kStates; ++i) p[i * kPad + i] = 1.0;

  if (!model.hazards().empty()) {
    const auto& kt = kernels::active();
    std::array<double, kPadded> q{};
    DormandPrince ode(kPadded, tol);
    ode.integrate(
        [&](double s, const double* y, double* dy) {
          fill_padded_rates(model, s, q.data());
          kt.matmul8(y, q.data(), dy);
        },
        t, t + dt, p);
  }

  StateMatrix out;
  for (int i = 0; i < kStates; ++i) {
    double total = 0.0;
    for (int j = 0; j < kStates; ++j) {
      double v = p[i * kPad + j];
      const bool reachable = j >= i;
      if (!reachable || (i == kFailed && j != kFailed)) v = 0.0;
      if (v < 0.0) {
        if (v < -kClampLimit) throw IntegrationError("transition probability below clamp tolerance");
        v = 0.0;
      }
      out(i, j) = v;
      total += v;
    }
    if (!(total > 0.0)) throw IntegrationError("transition matrix row lost all mass");
    for (int j = 0; j < kStates; ++j) out(i, j) = std::min(1.0, out(i, j) / total);
  }
  return out;
}

void write_occupancy_csv(std::ostream& out, const OccupancyCurve& curve) {
  out << "t,S1,S2,S3,S4,S5,SF\r\n";
  char buf[32];
  for (std::size_t r = 0; r < curve.times.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.9g", curve.times[r]);
    out << buf;
    for (double v : curve.values[r]) {
      std::snprintf(buf, sizeof buf, "%.9g", v);
      out << ',' << buf;
    }
    out << "\r\n";
  }
}

TransitionCache::TransitionCache(std::shared_ptr<const DegradationModel> model, double dt, std::size_t max_entries)
    : model_(std::move(model)), dt_(dt), max_entries_(max_entries) {
  if (!model_) throw DomainError("transition cache needs a model");
  if (!(dt_ > 0.0)) throw DomainError("transition interval must be > 0");
}

StateMatrix TransitionCache::transition(double t) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = transitions_.find(t); it != transitions_.end()) return it->second;
  }
  StateMatrix m = interval_transition_matrix(*model_, t, dt_);
  std::unique_lock lock(mutex_);
  if (transitions_.size() < max_entries_) transitions_.emplace(t, m);
  return m;
}

SeverityVector TransitionCache::occupancy(double t) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = occupancies_.find(t); it != occupancies_.end()) return it->second;
  }
  SeverityVector s = occupancy_at(*model_, t);
  std::unique_lock lock(mutex_);
  if (occupancies_.size() < max_entries_) occupancies_.emplace(t, s);
  return s;
}

std::size_t TransitionCache::size() const {
  std::shared_lock lock(mutex_);
  return transitions_.size() + occupancies_.size();
}

}  // namespace pipemdp
