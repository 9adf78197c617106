#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "pipemdp/msdm.hpp"
#include "pipemdp/rng.hpp"
#include "pipemdp/severity.hpp"

namespace pipemdp {

enum class Action : std::uint8_t { DoNothing = 0, Maintain = 1, Replace = 2 };
inline constexpr int kActionCount = 3;

std::string_view to_string(Action a);
/// Throws DomainError for values outside {0, 1, 2}.
Action action_from_int(long long value);

inline constexpr int kObsDim = 13;
/// <age, h1..h5, hF, S1..S5, SF>
using Observation = std::array<double, kObsDim>;
inline constexpr int kObsAge = 0;
inline constexpr int kObsHealth = 1;
inline constexpr int kObsPrognosis = 7;

struct EnvConfig {
  double length_m = 40.0;
  double segment_m = 1.0;
  double diameter_mm = 200.0;
  double decision_interval = 0.5;  // years
  double horizon = 100.0;          // years of simulated time per episode
  std::shared_ptr<const DegradationModel> dynamics;
  std::shared_ptr<const DegradationModel> prognosis;
  double initial_age_lo = 0.0;
  double initial_age_hi = 50.0;
  double failure_penalty = 100'000.0;
  double logistic_cost = 500.0;
  // Per-segment maintenance cost magnitudes for severities 1..5 (F cannot be maintained).
  std::array<double, 5> maintenance_cost = {0.0, 0.0, 500.0, 700.0, 900.0};
  std::uint64_t seed = 0;

  /// Defaults of the reference setup: 40 m x 200 mm pipe, 1 m segments,
  /// half-year decisions over 100 years, Weibull dynamics and prognosis.
  static EnvConfig defaults();

  /// ceil(L / dL)
  int segments() const;
  /// Magnitude of -(450 + 0.66 D + 0.0008 D^2) L, in Euros.
  double replacement_cost() const;
  /// failure_penalty + max per-segment maintenance cost * n_d.
  double reward_normalizer() const;
  int steps_per_episode() const;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

struct PipeState {
  double age = 0.0;
  double elapsed = 0.0;  // simulated years since reset
  std::vector<std::uint8_t> d;  // severity index per segment
  SeverityCounts counts{};
  SeverityVector h{};
  SeverityVector prognosis{};

  /// Throws InvalidState when d, counts and h disagree.
  void validate() const;
  /// Recomputes counts and h from d.
  void recount();
};

struct RewardBreakdown {
  double c_m = 0.0;
  double c_r = 0.0;
  double c_f = 0.0;
  double r = 0.0;

  double total() const { return c_m + c_r + c_f; }
};

struct StepResult {
  PipeState state;
  RewardBreakdown reward;
  bool done = false;
};

/// Transition caches for the dynamics and prognosis models of one config.
/// Shared read-only by any number of environments.
struct EnvModels {
  std::shared_ptr<const TransitionCache> dynamics;
  std::shared_ptr<const TransitionCache> prognosis;

  static std::shared_ptr<const EnvModels> build(const EnvConfig& cfg);
};

Observation observe(const PipeState& state);

/// Moves every segment at severity 3, 4 or 5 to severity 2 and returns the
/// maintenance cost (<= 0) charged on the pre-repair counts.
double apply_maintenance(PipeState& state, const EnvConfig& cfg);

/// Resets a pipe to severity 1 everywhere at age 0. Returns the replacement cost (<= 0).
double apply_replacement(PipeState& state, const EnvConfig& cfg, const EnvModels& models);

/// Samples the next severity of every segment over one decision interval.
void degrade(PipeState& state, const EnvModels& models, Rng& rng);

PipeState reset(const EnvConfig& cfg, const EnvModels& models, Rng& rng, std::optional<double> fixed_age);

StepResult step(const PipeState& state, Action a, const EnvConfig& cfg, const EnvModels& models, Rng& rng);

/// Environment instance owning its state and random stream.
class PipeEnv {
 public:
  explicit PipeEnv(EnvConfig cfg, std::shared_ptr<const EnvModels> models = nullptr);

  const EnvConfig& config() const { return cfg_; }
  const std::shared_ptr<const EnvModels>& models() const { return models_; }

  /// Reseeds the random stream, then resets.
  const PipeState& reset(std::uint64_t seed, std::optional<double> fixed_age = std::nullopt);
  /// Resets continuing the current random stream.
  const PipeState& reset(std::optional<double> fixed_age = std::nullopt);

  /// Throws InvalidState when called before reset().
  StepResult step(Action a);

  bool has_state() const { return state_.has_value(); }
  const PipeState& state() const;
  Observation observation() const { return observe(state()); }

 private:
  EnvConfig cfg_;
  std::shared_ptr<const EnvModels> models_;
  Rng rng_;
  std::optional<PipeState> state_;
};

}  // namespace pipemdp
