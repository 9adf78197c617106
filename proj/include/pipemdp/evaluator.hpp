#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pipemdp/pipe_env.hpp"
#include "pipemdp/policies.hpp"

namespace pipemdp {

inline constexpr double kDefaultDiscount = 0.995;

struct StepRecord {
  Observation obs;  // observed before the action
  Action action = Action::DoNothing;
  RewardBreakdown reward;
};

struct EpisodeLog {
  std::string policy;
  double start_age = 0.0;
  std::uint64_t seed = 0;
  int segments = 0;
  std::vector<StepRecord> steps;

  /// Euros spent: -(sum of c_m + c_r + c_f).
  double total_cost() const;
  double discounted_return(double gamma = kDefaultDiscount) const;
};

/// Reset at start_age with the given seed and follow the policy until done.
EpisodeLog run_episode(const Policy& policy, const EnvConfig& cfg, double start_age, std::uint64_t seed,
                       std::shared_ptr<const EnvModels> models = nullptr);

/// Per-episode reduction; PolicyStats is assembled from these in seed order.
struct EpisodeSummary {
  double cost = 0.0;  // Euros
  double discounted_return = 0.0;
  std::array<std::int64_t, kActionCount> actions{};
  std::array<std::int64_t, kStates> severity_segment_steps{};
};

EpisodeSummary summarize(const EpisodeLog& log, double gamma = kDefaultDiscount);

struct PolicyStats {
  std::string policy;
  double start_age = 0.0;
  int episodes = 0;
  double cost_mean_k = 0.0;  // thousands of Euros
  double cost_std_k = 0.0;   // population standard deviation
  std::array<double, kActionCount> action_pct{};
  std::array<double, kStates> severity_pct{};
  std::vector<double> episode_costs;  // Euros, in seed order
  std::vector<std::uint64_t> seeds;
};

PolicyStats aggregate(const std::string& policy, double start_age, const std::vector<std::uint64_t>& seeds,
                      const std::vector<EpisodeSummary>& summaries);

struct EvaluateOptions {
  int episodes = 100;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  // When set, every episode log is handed to this callback (in seed order).
  std::function<void(const EpisodeLog&)> on_episode;
};

/// Runs episodes with seeds base_seed .. base_seed + n - 1 at every start age.
std::vector<PolicyStats> evaluate(const Policy& policy, const EnvConfig& cfg, const std::vector<double>& start_ages,
                                  const EvaluateOptions& opts, std::shared_ptr<const EnvModels> models = nullptr);

/// Every policy sees the same seed sequence. Result is indexed [policy][age].
std::vector<std::vector<PolicyStats>> compare(const std::vector<std::shared_ptr<const Policy>>& policies,
                                              const EnvConfig& cfg, const std::vector<double>& start_ages,
                                              const EvaluateOptions& opts);

// CSV surfaces.
void write_episode_csv(std::ostream& out, const EpisodeLog& log);
/// Parses what write_episode_csv produced. Throws FormatError.
EpisodeLog read_episode_csv(std::istream& in, int segments);
void write_stats_csv(std::ostream& out, const std::vector<PolicyStats>& rows);
void write_costs_csv(std::ostream& out, const PolicyStats& stats);

std::string format_age(double age);

}  // namespace pipemdp
