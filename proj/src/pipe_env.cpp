#include "pipemdp/pipe_env.hpp"

#include <algorithm>
#include <cmath>

#include "pipemdp/errors.hpp"
#include "pipemdp/kernels.hpp"

namespace pipemdp {

namespace {

constexpr std::uint8_t kS1 = 0;
constexpr std::uint8_t kS2 = 1;

// Cumulative row sums padded to the kernel layout. Entry 5 is forced to 1.
void fill_cdf_row(double* dst, const double* probs) {
  double acc = 0.0;
  for (int j = 0; j < kStates; ++j) {
    acc += probs[j];
    dst[j] = acc;
  }
  dst[kStates - 1] = 1.0;
  dst[6] = dst[7] = 1.0;
}

void sample_segments(const std::uint8_t* from, std::uint8_t* to, std::size_t n, const double* cdf, Rng& rng) {
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform();
  kernels::active().sample_rows(from, u.data(), cdf, to, n);
}

}  // namespace

std::string_view to_string(Action a) {
  switch (a) {
    case Action::DoNothing: return "do_nothing";
    case Action::Maintain: return "maintain";
    case Action::Replace: return "replace";
  }
  return "?";
}

Action action_from_int(long long value) {
  if (value < 0 || value >= kActionCount) throw DomainError("action must be 0, 1 or 2");
  return static_cast<Action>(value);
}

EnvConfig EnvConfig::defaults() {
  EnvConfig cfg;
  auto weibull = std::make_shared<const DegradationModel>(DegradationModel::builtin(HazardFamily::Weibull));
  cfg.dynamics = weibull;
  cfg.prognosis = weibull;
  return cfg;
}

int EnvConfig::segments() const { return static_cast<int>(std::ceil(length_m / segment_m - 1e-12)); }

double EnvConfig::replacement_cost() const {
  return (450.0 + 0.66 * diameter_mm + 0.0008 * diameter_mm * diameter_mm) * length_m;
}

double EnvConfig::reward_normalizer() const {
  const double max_seg = *std::max_element(maintenance_cost.begin(), maintenance_cost.end());
  return failure_penalty + max_seg * segments();
}

int EnvConfig::steps_per_episode() const {
  return static_cast<int>(std::llround(horizon / decision_interval));
}

void EnvConfig::validate() const {
  if (!(length_m > 0.0) || !(segment_m > 0.0) || !(segment_m < length_m)) {
    throw ConfigError("segment length must satisfy 0 < dL < L");
  }
  if (!(diameter_mm > 0.0)) throw ConfigError("diameter must be > 0");
  if (!(decision_interval > 0.0)) throw ConfigError("decision interval must be > 0");
  const double ratio = horizon / decision_interval;
  if (!(horizon > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("horizon must be a positive multiple of the decision interval");
  }
  if (!dynamics || !prognosis) throw ConfigError("dynamics and prognosis models are required");
  if (!(initial_age_lo >= 0.0) || !(initial_age_hi >= initial_age_lo)) {
    throw ConfigError("initial age range must satisfy 0 <= lo <= hi");
  }
  if (!(failure_penalty >= 0.0) || !(logistic_cost >= 0.0)) throw ConfigError("costs must be >= 0");
  for (double c : maintenance_cost) {
    if (!(c >= 0.0)) throw ConfigError("maintenance costs must be >= 0");
  }
  if (!(reward_normalizer() > 0.0)) throw ConfigError("reward normalizer must be > 0");
  if (replacement_cost() > reward_normalizer() || logistic_cost > failure_penalty) {
    throw ConfigError("intervention costs exceed the reward normalizer; rewards would leave [-1, 0]");
  }
}

void PipeState::recount() {
  counts = {};
  for (auto s : d) {
    if (s >= kStates) throw InvalidState("segment severity out of range");
    ++counts[s];
  }
  const double n = static_cast<double>(d.size());
  for (int k = 0; k < kStates; ++k) h[k] = counts[k] / n;
}

void PipeState::validate() const {
  if (d.empty()) throw InvalidState("pipe has no segments");
  SeverityCounts c{};
  for (auto s : d) {
    if (s >= kStates) throw InvalidState("segment severity out of range");
    ++c[s];
  }
  if (c != counts) throw InvalidState("segment counts do not match severity vector");
  const double n = static_cast<double>(d.size());
  for (int k = 0; k < kStates; ++k) {
    if (h[k] != counts[k] / n) throw InvalidState("health vector does not match segment counts");
  }
  if (!(age >= 0.0)) throw InvalidState("negative pipe age");
}

std::shared_ptr<const EnvModels> EnvModels::build(const EnvConfig& cfg) {
  if (!cfg.dynamics || !cfg.prognosis) throw ConfigError("dynamics and prognosis models are required");
  auto m = std::make_shared<EnvModels>();
  m->dynamics = std::make_shared<const TransitionCache>(cfg.dynamics, cfg.decision_interval);
  m->prognosis = cfg.prognosis == cfg.dynamics
                     ? m->dynamics
                     : std::make_shared<const TransitionCache>(cfg.prognosis, cfg.decision_interval);
  return m;
}

Observation observe(const PipeState& state) {
  Observation obs{};
  obs[kObsAge] = state.age;
  std::copy(state.h.begin(), state.h.end(), obs.begin() + kObsHealth);
  std::copy(state.prognosis.begin(), state.prognosis.end(), obs.begin() + kObsPrognosis);
  return obs;
}

double apply_maintenance(PipeState& state, const EnvConfig& cfg) {
  double variable = 0.0;
  for (int k = 2; k < 5; ++k) variable += state.counts[k] * cfg.maintenance_cost[k];
  for (auto& s : state.d) {
    if (s >= 2 && s <= 4) s = kS2;
  }
  state.recount();
  return -(variable + cfg.logistic_cost);
}

double apply_replacement(PipeState& state, const EnvConfig& cfg, const EnvModels& models) {
  state.age = 0.0;
  std::fill(state.d.begin(), state.d.end(), kS1);
  state.recount();
  state.prognosis = models.prognosis->occupancy(0.0);
  return -cfg.replacement_cost();
}

void degrade(PipeState& state, const EnvModels& models, Rng& rng) {
  const StateMatrix p = models.dynamics->transition(state.age);
  std::array<double, kernels::kPadded> cdf{};
  for (int i = 0; i < kStates; ++i) fill_cdf_row(cdf.data() + i * kernels::kPad, &p.v[i * kStates]);
  std::vector<std::uint8_t> next(state.d.size());
  sample_segments(state.d.data(), next.data(), next.size(), cdf.data(), rng);
  state.d = std::move(next);
  state.age += models.dynamics->dt();
  state.recount();
  state.prognosis = models.prognosis->occupancy(state.age);
}

PipeState reset(const EnvConfig& cfg, const EnvModels& models, Rng& rng, std::optional<double> fixed_age) {
  if (fixed_age && !(*fixed_age >= 0.0)) throw DomainError("start age must be >= 0");
  PipeState state;
  state.age = fixed_age ? *fixed_age : cfg.initial_age_lo + (cfg.initial_age_hi - cfg.initial_age_lo) * rng.uniform();

  const SeverityVector occ = models.dynamics->occupancy(state.age);
  std::array<double, kernels::kPadded> cdf{};
  fill_cdf_row(cdf.data(), occ.data());
  const auto n = static_cast<std::size_t>(cfg.segments());
  const std::vector<std::uint8_t> row0(n, 0);
  state.d.assign(n, 0);
  sample_segments(row0.data(), state.d.data(), n, cdf.data(), rng);
  state.recount();
  state.prognosis = models.prognosis->occupancy(state.age);
  return state;
}

StepResult step(const PipeState& state, Action a, const EnvConfig& cfg, const EnvModels& models, Rng& rng) {
  state.validate();
  StepResult out{state, {}, false};
  PipeState& next = out.state;
  RewardBreakdown& rw = out.reward;

  switch (a) {
    case Action::Replace:
      rw.c_r = apply_replacement(next, cfg, models);
      break;
    case Action::Maintain:
      rw.c_m = apply_maintenance(next, cfg);
      degrade(next, models, rng);
      break;
    case Action::DoNothing:
      degrade(next, models, rng);
      break;
  }
  if (a != Action::Replace && next.counts[kFailed] > 0) rw.c_f = -cfg.failure_penalty;
  // Maintenance on an all-worst pipe followed by a failure within the same
  // interval can exceed the normalizer by the logistic cost.
  rw.r = std::max(-1.0, rw.total() / cfg.reward_normalizer());

  next.elapsed = state.elapsed + cfg.decision_interval;
  out.done = next.elapsed >= cfg.horizon - 1e-9 * cfg.decision_interval;
  return out;
}

PipeEnv::PipeEnv(EnvConfig cfg, std::shared_ptr<const EnvModels> models)
    : cfg_(std::move(cfg)), models_(std::move(models)), rng_(cfg_.seed) {
  cfg_.validate();
  if (!models_) models_ = EnvModels::build(cfg_);
}

const PipeState& PipeEnv::reset(std::uint64_t seed, std::optional<double> fixed_age) {
  rng_.reseed(seed);
  return reset(fixed_age);
}

const PipeState& PipeEnv::reset(std::optional<double> fixed_age) {
  state_ = pipemdp::reset(cfg_, *models_, rng_, fixed_age);
  return *state_;
}

StepResult PipeEnv::step(Action a) {
  if (!state_) throw InvalidState("step() called before reset()");
  StepResult res = pipemdp::step(*state_, a, cfg_, *models_, rng_);
  state_ = res.state;
  return res;
}

const PipeState& PipeEnv::state() const {
  if (!state_) throw InvalidState("environment has not been reset");
  return *state_;
}

}  // namespace pipemdp
