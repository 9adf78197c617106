#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "pipemdp/severity.hpp"

namespace pipemdp {

enum class HazardFamily { Exponential, Gompertz, Weibull };

std::string_view to_string(HazardFamily family);
// Accepts "exponential", "gompertz", "weibull" (case-insensitive).
std::optional<HazardFamily> parse_family(std::string_view name);

/// One transition's hazard-rate law. Rates are in 1/year, time in years.
///
///   Exponential  λ(t) = ε
///   Gompertz     λ(t) = α β exp(β t)
///   Weibull      λ(t) = (ρ/η) (t/η)^(ρ-1)     η = scale, ρ = shape
class HazardSpec {
 public:
  static HazardSpec exponential(double epsilon);
  static HazardSpec gompertz(double alpha, double beta);
  static HazardSpec weibull(double scale_eta, double shape_rho);

  HazardFamily family() const { return family_; }
  // Parameter order: (ε), (α, β), (η, ρ). Unused slot is 0.
  double p0() const { return p0_; }
  double p1() const { return p1_; }

  /// Throws DomainError for t < 0 and SingularityError for a Weibull
  /// shape < 1 evaluated at t = 0.
  double rate(double t) const;

  bool operator==(const HazardSpec&) const = default;

 private:
  HazardSpec(HazardFamily family, double p0, double p1);

  HazardFamily family_;
  double p0_;
  double p1_;
};

inline double eval_hazard(const HazardSpec& spec, double t) { return spec.rate(t); }

/// The nine edges of the degradation chain: k -> k+1 for k = 1..4 and
/// k -> F for k = 1..5.
enum class Edge : int {
  k12 = 0, k23, k34, k45, k1F, k2F, k3F, k4F, k5F
};
inline constexpr int kEdgeCount = 9;

Severity edge_from(Edge e);
Severity edge_to(Edge e);
std::string_view edge_label(Edge e);  // "1->2", "5->F", ...
std::optional<Edge> parse_edge(std::string_view label);

/// Hazard law per chain edge. A missing edge carries zero rate.
class HazardTable {
 public:
  HazardTable() = default;

  void set(Edge e, HazardSpec spec) { entries_[static_cast<int>(e)] = spec; }
  void clear(Edge e) { entries_[static_cast<int>(e)].reset(); }
  const std::optional<HazardSpec>& get(Edge e) const { return entries_[static_cast<int>(e)]; }

  bool complete() const;
  bool empty() const;

  /// Rate of edge e at age t; 0 for missing edges.
  double rate(Edge e, double t) const;

  bool operator==(const HazardTable&) const = default;

 private:
  std::array<std::optional<HazardSpec>, kEdgeCount> entries_{};
};

struct CohortParameters {
  HazardFamily family;
  HazardTable hazards;
  SeverityVector initial;  // renormalized to sum to 1
};

/// Calibrated parameters for concrete pipes carrying mixed/waste content.
CohortParameters builtin_cmw(HazardFamily family);

/// Initial-state vector as printed (three significant digits, not normalized).
SeverityVector builtin_cmw_initial_printed(HazardFamily family);

/// Scales a nonnegative vector to unit sum. Throws DomainError on a
/// negative entry or zero total.
SeverityVector renormalize(const SeverityVector& v);

/// Loads a cohort parameter file:
///   {"family": "weibull",
///    "transitions": {"1->2": {"eta": 44, "rho": 1.3}, ...},
///    "S0": [s1, s2, s3, s4, s5, sF]}
/// Exponential entries use "epsilon", Gompertz "alpha"/"beta".
/// Throws FormatError on malformed content or a missing edge.
CohortParameters load_cohort_json(const std::string& path);
CohortParameters parse_cohort_json(std::string_view text);

}  // namespace pipemdp
