#include "pipemdp/evaluator.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "pipemdp/errors.hpp"

namespace pipemdp {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_pct(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double EpisodeLog::total_cost() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward.total();
  return -total;
}

double EpisodeLog::discounted_return(double gamma) const {
  double ret = 0.0;
  double w = 1.0;
  for (const auto& s : steps) {
    ret += w * s.reward.r;
    w *= gamma;
  }
  return ret;
}

EpisodeLog run_episode(const Policy& policy, const EnvConfig& cfg, double start_age, std::uint64_t seed,
                       std::shared_ptr<const EnvModels> models) {
  if (!(start_age >= 0.0)) throw DomainError("start age must be >= 0");
  PipeEnv env(cfg, std::move(models));
  env.reset(seed, start_age);

  EpisodeLog log;
  log.policy = policy.name();
  log.start_age = start_age;
  log.seed = seed;
  log.segments = cfg.segments();
  log.steps.reserve(cfg.steps_per_episode());

  DecisionContext ctx;
  bool done = false;
  while (!done) {
    StepRecord rec;
    rec.obs = env.observation();
    rec.action = policy.decide(rec.obs, ctx);
    const StepResult res = env.step(rec.action);
    rec.reward = res.reward;
    done = res.done;
    log.steps.push_back(rec);

    if (rec.action == Action::DoNothing) ctx.years_since_maintenance += cfg.decision_interval;
    else ctx.years_since_maintenance = cfg.decision_interval;
  }
  return log;
}

EpisodeSummary summarize(const EpisodeLog& log, double gamma) {
  EpisodeSummary s;
  s.cost = log.total_cost();
  s.discounted_return = log.discounted_return(gamma);
  const double n = static_cast<double>(log.segments);
  for (const auto& step : log.steps) {
    ++s.actions[static_cast<int>(step.action)];
    for (int k = 0; k < kStates; ++k) s.severity_segment_steps[k] += std::llround(step.obs[kObsHealth + k] * n);
  }
  return s;
}

PolicyStats aggregate(const std::string& policy, double start_age, const std::vector<std::uint64_t>& seeds,
                      const std::vector<EpisodeSummary>& summaries) {
  PolicyStats st;
  st.policy = policy;
  st.start_age = start_age;
  st.episodes = static_cast<int>(summaries.size());
  st.seeds = seeds;
  if (summaries.empty()) return st;

  std::array<std::int64_t, kActionCount> actions{};
  std::array<std::int64_t, kStates> severity{};
  double sum = 0.0;
  for (const auto& s : summaries) {
    st.episode_costs.push_back(s.cost);
    sum += s.cost;
    for (int a = 0; a < kActionCount; ++a) actions[a] += s.actions[a];
    for (int k = 0; k < kStates; ++k) severity[k] += s.severity_segment_steps[k];
  }
  const double mean = sum / static_cast<double>(summaries.size());
  double var = 0.0;
  for (const auto& s : summaries) var += (s.cost - mean) * (s.cost - mean);
  var /= static_cast<double>(summaries.size());
  st.cost_mean_k = mean / 1000.0;
  st.cost_std_k = std::sqrt(var) / 1000.0;

  std::int64_t n_actions = 0;
  for (auto c : actions) n_actions += c;
  std::int64_t n_seg = 0;
  for (auto c : severity) n_seg += c;
  for (int a = 0; a < kActionCount; ++a) st.action_pct[a] = n_actions ? 100.0 * actions[a] / n_actions : 0.0;
  for (int k = 0; k < kStates; ++k) st.severity_pct[k] = n_seg ? 100.0 * severity[k] / n_seg : 0.0;
  return st;
}

std::vector<PolicyStats> evaluate(const Policy& policy, const EnvConfig& cfg, const std::vector<double>& start_ages,
                                  const EvaluateOptions& opts, std::shared_ptr<const EnvModels> models) {
  if (opts.episodes < 1) throw DomainError("need at least one episode");
  cfg.validate();
  if (!models) models = EnvModels::build(cfg);

  std::vector<std::uint64_t> seeds(opts.episodes);
  for (int e = 0; e < opts.episodes; ++e) seeds[e] = opts.base_seed + static_cast<std::uint64_t>(e);

  std::vector<PolicyStats> out;
  for (double age : start_ages) {
    std::vector<EpisodeSummary> summaries(opts.episodes);
    std::vector<EpisodeLog> logs(opts.on_episode ? opts.episodes : 0);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
      for (int e = next++; e < opts.episodes; e = next++) {
        try {
          EpisodeLog log = run_episode(policy, cfg, age, seeds[e], models);
          summaries[e] = summarize(log);
          if (opts.on_episode) logs[e] = std::move(log);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = opts.episodes;
        }
      }
    };

    const int jobs = std::max(1, std::min(opts.jobs, opts.episodes));
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    if (opts.on_episode) {
      for (const auto& log : logs) opts.on_episode(log);
    }
    out.push_back(aggregate(policy.name(), age, seeds, summaries));
  }
  return out;
}

std::vector<std::vector<PolicyStats>> compare(const std::vector<std::shared_ptr<const Policy>>& policies,
                                              const EnvConfig& cfg, const std::vector<double>& start_ages,
                                              const EvaluateOptions& opts) {
  if (policies.empty()) throw DomainError("compare needs at least one policy");
  auto models = EnvModels::build(cfg);
  std::vector<std::vector<PolicyStats>> table;
  for (const auto& p : policies) table.push_back(evaluate(*p, cfg, start_ages, opts, models));
  return table;
}

void write_episode_csv(std::ostream& out, const EpisodeLog& log) {
  out << "t,action,h1,h2,h3,h4,h5,hF,S1,S2,S3,S4,S5,SF,c_m,c_r,c_f,r\r\n";
  for (const auto& s : log.steps) {
    out << fmt17(s.obs[kObsAge]) << ',' << static_cast<int>(s.action);
    for (int i = 1; i < kObsDim; ++i) out << ',' << fmt17(s.obs[i]);
    out << ',' << fmt17(s.reward.c_m) << ',' << fmt17(s.reward.c_r) << ',' << fmt17(s.reward.c_f) << ','
        << fmt17(s.reward.r) << "\r\n";
  }
}

EpisodeLog read_episode_csv(std::istream& in, int segments) {
  EpisodeLog log;
  log.segments = segments;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("episode CSV is empty");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        fields.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw FormatError("trailing characters in episode CSV cell");
      } catch (const std::logic_error&) {
        throw FormatError("non-numeric cell '" + cell + "' in episode CSV");
      }
    }
    if (fields.size() != 18) throw FormatError("episode CSV row must have 18 fields");
    StepRecord rec;
    rec.obs[kObsAge] = fields[0];
    rec.action = action_from_int(static_cast<long long>(fields[1]));
    for (int i = 1; i < kObsDim; ++i) rec.obs[i] = fields[1 + i];
    rec.reward = {fields[14], fields[15], fields[16], fields[17]};
    log.steps.push_back(rec);
  }
  return log;
}

void write_stats_csv(std::ostream& out, const std::vector<PolicyStats>& rows) {
  out << "policy,start_age,episodes,cost_mean_k,cost_std_k,a0_pct,a1_pct,a2_pct,"
         "k1_pct,k2_pct,k3_pct,k4_pct,k5_pct,kF_pct\r\n";
  for (const auto& st : rows) {
    out << st.policy << ',' << format_age(st.start_age) << ',' << st.episodes << ',' << fmt17(st.cost_mean_k) << ','
        << fmt17(st.cost_std_k);
    for (double p : st.action_pct) out << ',' << fmt_pct(p);
    for (double p : st.severity_pct) out << ',' << fmt_pct(p);
    out << "\r\n";
  }
}

void write_costs_csv(std::ostream& out, const PolicyStats& stats) {
  out << "episode,seed,cost_eur\r\n";
  for (std::size_t e = 0; e < stats.episode_costs.size(); ++e) {
    out << e << ',' << stats.seeds[e] << ',' << fmt17(stats.episode_costs[e]) << "\r\n";
  }
}

std::string format_age(double age) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", age);
  return buf;
}

}  // namespace pipemdp
