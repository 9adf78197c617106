#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pipemdp/hazard.hpp"
#include "pipemdp/ode.hpp"
#include "pipemdp/severity.hpp"

namespace pipemdp {

/// Dense 6x6 matrix over the severity states, row-major.
struct StateMatrix {
  std::array<double, kStates * kStates> v{};

  double& operator()(int i, int j) { return v[i * kStates + j]; }
  double operator()(int i, int j) const { return v[i * kStates + j]; }

  static StateMatrix identity();
  bool operator==(const StateMatrix&) const = default;
};

/// Hazards below this age are evaluated at this age inside the solvers.
/// Weibull laws with shape < 1 have a pole at t = 0.
inline constexpr double kMinHazardAge = 1e-6;

/// Continuous-time degradation chain over {1, 2, 3, 4, 5, F}: rate matrix
/// built from the hazard table plus the initial-state distribution.
class DegradationModel {
 public:
  /// Throws DomainError when `initial` is not a probability vector
  /// (negative entries or |sum - 1| > 1e-12).
  DegradationModel(HazardTable hazards, SeverityVector initial, std::string label);

  static DegradationModel from_cohort(const CohortParameters& params);
  static DegradationModel builtin(HazardFamily family);
  /// Model with no transitions: segments keep their initial severity forever.
  static DegradationModel zero_rate(SeverityVector initial);

  const HazardTable& hazards() const { return hazards_; }
  const SeverityVector& initial() const { return initial_; }
  const std::string& label() const { return label_; }

  /// Generator at age t: q_ij = hazard of edge i->j, diagonal = -(row sum).
  /// Row F is zero. Propagates SingularityError from the hazards.
  StateMatrix rate_matrix(double t) const;

 private:
  HazardTable hazards_;
  SeverityVector initial_;
  std::string label_;
};

inline StateMatrix assemble_Q(const DegradationModel& model, double t) { return model.rate_matrix(t); }

struct OccupancyCurve {
  std::vector<double> times;
  std::vector<SeverityVector> values;
};

/// Occupancy probabilities S_k(t) on the grid 0, step, 2*step, ... up to
/// t_end (t_end is appended when it is off the grid).
OccupancyCurve solve_occupancy(const DegradationModel& model, double t_end, double grid_step,
                               OdeTolerance tol = {});

/// S_k(t) at a single age.
SeverityVector occupancy_at(const DegradationModel& model, double t, OdeTolerance tol = {});

/// Transition probabilities over [t, t + dt], from the forward Kolmogorov
/// equation started at the identity. Rows are stochastic, entries below the
/// diagonal (except column F) are exactly zero and row F is the F unit vector.
StateMatrix interval_transition_matrix(const DegradationModel& model, double t, double dt,
                                       OdeTolerance tol = {});

/// Writes "t,S1,S2,S3,S4,S5,SF" rows with 9 significant digits.
void write_occupancy_csv(std::ostream& out, const OccupancyCurve& curve);

/// Memoizes interval_transition_matrix(model, t, dt) for a fixed model and dt,
/// and occupancy_at(model, t). Safe for concurrent use.
class TransitionCache {
 public:
  TransitionCache(std::shared_ptr<const DegradationModel> model, double dt,
                  std::size_t max_entries = 200'000);

  const DegradationModel& model() const { return *model_; }
  double dt() const { return dt_; }

  StateMatrix transition(double t) const;
  SeverityVector occupancy(double t) const;

  std::size_t size() const;

 private:
  std::shared_ptr<const DegradationModel> model_;
  double dt_;
  std::size_t max_entries_;
  mutable std::shared_mutex mutex_;
  mutable std::map<double, StateMatrix> transitions_;
  mutable std::map<double, SeverityVector> occupancies_;
};

}  // namespace pipemdp
