#include "pipemdp/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pipemdp/config.hpp"
#include "pipemdp/env_server.hpp"
#include "pipemdp/errors.hpp"
#include "pipemdp/evaluator.hpp"
#include "pipemdp/msdm.hpp"
#include "pipemdp/policies.hpp"

namespace pipemdp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCsvHelp =
    "CSV outputs (RFC 4180, CRLF line endings):\n"
    "  solve      t,S1,S2,S3,S4,S5,SF\n"
    "  simulate   episode_<policy>_<age>_<seed>.csv: t,action,h1,h2,h3,h4,h5,hF,S1,S2,S3,S4,S5,SF,c_m,c_r,c_f,r\n"
    "  evaluate   stats_<policy>_<age>.csv and comparison.csv: policy,start_age,episodes,cost_mean_k,cost_std_k,\n"
    "             a0_pct,a1_pct,a2_pct,k1_pct,k2_pct,k3_pct,k4_pct,k5_pct,kF_pct\n"
    "             costs_<policy>_<age>.csv: episode,seed,cost_eur\n"
    "Every output set is accompanied by manifest.json; `pipemdp rerun manifest.json` reproduces it.\n"
    "Exit codes: 0 ok, 2 bad arguments, 3 numerical failure, 4 I/O failure, 5 bind failure.";

// I/O failures that map to exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

struct SolveArgs {
  std::string family = "weibull";
  std::string params_file;
  double t_end = 120.0;
  double step = 0.5;
  std::string out = "-";
};

struct PolicyArgs {
  HeuristicParams heuristics;
};

struct SimulateArgs {
  std::string policy = "rm";
  double start_age = 0.0;
  std::uint64_t seed = 0;
  std::string out = ".";
  bool json_output = false;
};

struct EvaluateArgs {
  std::vector<std::string> policies = {"rm", "schm", "cbm"};
  std::vector<double> ages = {0.0, 25.0, 50.0};
  int episodes = 100;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = ".";
  bool json_output = false;
  bool episode_logs = false;
};

struct ServeArgs {
  std::string endpoint = "stdio";
};

struct ConfigArgs {
  std::string config_path;
  std::string dynamics;
  std::string prognosis;
};

json heuristics_json(const HeuristicParams& h) {
  return {{"cbm_age_limit", h.cbm.age_limit},
          {"cbm_h4", h.cbm.h4_threshold},
          {"cbm_h5", h.cbm.h5_threshold},
          {"schm_period", h.schm.maintenance_period}};
}

HeuristicParams heuristics_from_json(const json& j) {
  HeuristicParams h;
  h.cbm.age_limit = j.value("cbm_age_limit", h.cbm.age_limit);
  h.cbm.h4_threshold = j.value("cbm_h4", h.cbm.h4_threshold);
  h.cbm.h5_threshold = j.value("cbm_h5", h.cbm.h5_threshold);
  h.schm.maintenance_period = j.value("schm_period", h.schm.maintenance_period);
  return h;
}

LoadedConfig resolve_config(const ConfigArgs& a) {
  json doc = json::object();
  std::string path = a.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("PIPEMDP_CONFIG"); env && *env) path = env;
  }
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
  }
  if (!a.dynamics.empty()) doc["dynamics"] = a.dynamics;
  if (!a.prognosis.empty()) doc["prognosis"] = a.prognosis;
  return load_config(doc);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_manifest(const fs::path& path, const std::string& subcommand, const json& options, const json& config,
                    std::uint64_t seed, const std::string& output) {
  json m = {{"tool", "pipemdp"},
            {"version", kVersion},
            {"subcommand", subcommand},
            {"options", options},
            {"config", config},
            {"seed", seed},
            {"output", output},
            {"timestamp", timestamp()}};
  write_text(path, m.dump(2) + "\n");
}

std::shared_ptr<const Policy> policy_or_io_error(const std::string& spec, const HeuristicParams& h) {
  try {
    return make_policy(spec, h);
  } catch (const FormatError& e) {
    throw IoError(e.what());
  } catch (const ShapeError& e) {
    throw IoError(e.what());
  }
}

// ---- subcommands ---------------------------------------------------------

int do_solve(const SolveArgs& a, std::ostream& out) {
  CohortParameters cohort;
  if (!a.params_file.empty()) {
    try {
      cohort = load_cohort_json(a.params_file);
    } catch (const FormatError& e) {
      throw IoError(e.what());
    }
  } else {
    const auto family = parse_family(a.family);
    if (!family) throw ConfigError("unknown family '" + a.family + "'");
    cohort = builtin_cmw(*family);
  }
  if (!(a.t_end >= 0.0) || !(a.step > 0.0)) throw ConfigError("--t-end must be >= 0 and --step > 0");
  const auto model = DegradationModel::from_cohort(cohort);
  const auto curve = solve_occupancy(model, a.t_end, a.step);

  std::ostringstream csv;
  write_occupancy_csv(csv, curve);
  if (a.out == "-") {
    out << csv.str();
    return kOk;
  }
  const fs::path path(a.out);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_text(path, csv.str());
  json opts = {{"family", a.family}, {"params_file", a.params_file}, {"t_end", a.t_end}, {"step", a.step},
               {"out", a.out}};
  json cohort_json = {{"family", std::string(to_string(cohort.family))}, {"S0", cohort.initial}};
  write_manifest(path.string() + ".manifest.json", "solve", opts, cohort_json, 0, a.out);
  return kOk;
}

json episode_json(const EpisodeLog& log) {
  json steps = json::array();
  for (const auto& s : log.steps) {
    steps.push_back({{"obs", s.obs},
                     {"action", static_cast<int>(s.action)},
                     {"c_m", s.reward.c_m},
                     {"c_r", s.reward.c_r},
                     {"c_f", s.reward.c_f},
                     {"r", s.reward.r}});
  }
  return {{"policy", log.policy}, {"start_age", log.start_age}, {"seed", log.seed},
          {"total_cost", log.total_cost()}, {"steps", steps}};
}

json stats_json(const PolicyStats& st) {
  return {{"policy", st.policy},
          {"start_age", st.start_age},
          {"episodes", st.episodes},
          {"cost_mean_k", st.cost_mean_k},
          {"cost_std_k", st.cost_std_k},
          {"action_pct", st.action_pct},
          {"severity_pct", st.severity_pct},
          {"episode_costs", st.episode_costs},
          {"seeds", st.seeds}};
}

int do_simulate(const SimulateArgs& a, const PolicyArgs& p, const LoadedConfig& cfg, std::ostream& out) {
  if (!(a.start_age >= 0.0)) throw ConfigError("--start-age must be >= 0");
  const auto policy = policy_or_io_error(a.policy, p.heuristics);
  const EpisodeLog log = run_episode(*policy, cfg.env, a.start_age, a.seed);

  if (a.json_output) {
    out << episode_json(log).dump() << "\n";
    return kOk;
  }
  const fs::path dir(a.out);
  ensure_dir(dir);
  std::ostringstream csv;
  write_episode_csv(csv, log);
  const std::string name = "episode_" + policy->name() + "_" + format_age(a.start_age) + "_" + std::to_string(a.seed) + ".csv";
  write_text(dir / name, csv.str());
  json opts = {{"policy", a.policy}, {"start_age", a.start_age}, {"seed", a.seed}, {"out", a.out},
               {"heuristics", heuristics_json(p.heuristics)}};
  write_manifest(dir / "manifest.json", "simulate", opts, cfg.resolved, a.seed, a.out);
  out << (dir / name).string() << "\n";
  return kOk;
}

int do_evaluate(const EvaluateArgs& a, const PolicyArgs& p, const LoadedConfig& cfg, std::ostream& out) {
  if (a.episodes < 1) throw ConfigError("--episodes must be >= 1");
  if (a.jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (a.policies.empty()) throw ConfigError("--policies needs at least one policy");
  for (double age : a.ages) {
    if (!(age >= 0.0)) throw ConfigError("--ages must be >= 0");
  }
  std::vector<std::shared_ptr<const Policy>> policies;
  for (const auto& spec : a.policies) policies.push_back(policy_or_io_error(spec, p.heuristics));

  const fs::path dir(a.out);
  if (!a.json_output || a.episode_logs) ensure_dir(dir);

  EvaluateOptions opts;
  opts.episodes = a.episodes;
  opts.base_seed = a.seed;
  opts.jobs = a.jobs;
  std::string io_failure;
  if (a.episode_logs) {
    opts.on_episode = [&](const EpisodeLog& log) {
      std::ostringstream csv;
      write_episode_csv(csv, log);
      const std::string name =
          "episode_" + log.policy + "_" + format_age(log.start_age) + "_" + std::to_string(log.seed) + ".csv";
      std::ofstream f(dir / name, std::ios::binary);
      f << csv.str();
      if (!f && io_failure.empty()) io_failure = "failed writing " + (dir / name).string();
    };
  }
  const auto table = compare(policies, cfg.env, a.ages, opts);
  if (!io_failure.empty()) throw IoError(io_failure);

  if (a.json_output) {
    json doc = json::array();
    for (const auto& row : table) {
      for (const auto& st : row) doc.push_back(stats_json(st));
    }
    out << json{{"results", doc}}.dump() << "\n";
    return kOk;
  }

  std::vector<PolicyStats> all;
  for (const auto& row : table) {
    for (const auto& st : row) {
      const std::string suffix = st.policy + "_" + format_age(st.start_age) + ".csv";
      std::ostringstream stats, costs;
      write_stats_csv(stats, {st});
      write_costs_csv(costs, st);
      write_text(dir / ("stats_" + suffix), stats.str());
      write_text(dir / ("costs_" + suffix), costs.str());
      all.push_back(st);
    }
  }
  std::ostringstream comparison;
  write_stats_csv(comparison, all);
  write_text(dir / "comparison.csv", comparison.str());
  json opts_json = {{"policies", a.policies}, {"ages", a.ages},   {"episodes", a.episodes},
                    {"seed", a.seed},         {"jobs", a.jobs},   {"out", a.out},
                    {"episode_logs", a.episode_logs}, {"heuristics", heuristics_json(p.heuristics)}};
  write_manifest(dir / "manifest.json", "evaluate", opts_json, cfg.resolved, a.seed, a.out);
  out << comparison.str();
  return kOk;
}

int do_serve(const ServeArgs& a, const LoadedConfig& cfg, std::ostream& err) {
  if (a.endpoint == "stdio") {
    StreamTransport transport(std::cin, std::cout);
    serve_session(transport, cfg.env);
    return kOk;
  }
  EnvServer server(cfg.env);
  const std::string bound = server.bind(a.endpoint);
  err << "pipemdp: serving on " << bound << std::endl;
  server.run();
  return kOk;
}

int do_rerun(const std::string& manifest_path, const std::string& out_override, std::ostream& out) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read manifest " + manifest_path);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    const std::string sub = m.at("subcommand").get<std::string>();
    const json& o = m.at("options");
    if (sub == "solve") {
      SolveArgs a;
      a.family = o.at("family").get<std::string>();
      a.params_file = o.at("params_file").get<std::string>();
      a.t_end = o.at("t_end").get<double>();
      a.step = o.at("step").get<double>();
      a.out = out_override.empty() ? o.at("out").get<std::string>() : out_override;
      return do_solve(a, out);
    }
    const LoadedConfig cfg = load_config(m.at("config"));
    PolicyArgs p{heuristics_from_json(o.at("heuristics"))};
    if (sub == "simulate") {
      SimulateArgs a;
      a.policy = o.at("policy").get<std::string>();
      a.start_age = o.at("start_age").get<double>();
      a.seed = o.at("seed").get<std::uint64_t>();
      a.out = out_override.empty() ? o.at("out").get<std::string>() : out_override;
      return do_simulate(a, p, cfg, out);
    }
    if (sub == "evaluate") {
      EvaluateArgs a;
      a.policies = o.at("policies").get<std::vector<std::string>>();
      a.ages = o.at("ages").get<std::vector<double>>();
      a.episodes = o.at("episodes").get<int>();
      a.seed = o.at("seed").get<std::uint64_t>();
      a.jobs = o.at("jobs").get<int>();
      a.episode_logs = o.at("episode_logs").get<bool>();
      a.out = out_override.empty() ? o.at("out").get<std::string>() : out_override;
      return do_evaluate(a, p, cfg, out);
    }
    throw ConfigError("manifest names unknown subcommand '" + sub + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

void add_config_flags(CLI::App* cmd, ConfigArgs& c) {
  cmd->add_option("--config", c.config_path, "Environment config JSON (default: $PIPEMDP_CONFIG, else built-in)");
  cmd->add_option("--dynamics", c.dynamics, "Degradation model driving the pipe: exponential|gompertz|weibull");
  cmd->add_option("--prognosis", c.prognosis, "Model feeding the prognosis observation channel");
}

void add_heuristic_flags(CLI::App* cmd, PolicyArgs& p) {
  cmd->add_option("--cbm-age-limit", p.heuristics.cbm.age_limit, "CBM: replace at or above this pipe age (years)");
  cmd->add_option("--cbm-h4", p.heuristics.cbm.h4_threshold, "CBM: maintain when h4 reaches this fraction");
  cmd->add_option("--cbm-h5", p.heuristics.cbm.h5_threshold, "CBM: maintain when h5 reaches this fraction");
  cmd->add_option("--schm-period", p.heuristics.schm.maintenance_period, "SchM: years between maintenance actions");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sewer-pipe degradation simulator and maintenance policy evaluator", "pipemdp"};
  app.footer(kCsvHelp);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Write the severity occupancy curve S_k(t) of a degradation model");
  solve->add_option("--family", solve_args.family, "exponential|gompertz|weibull (built-in cohort parameters)");
  solve->add_option("--params", solve_args.params_file, "Cohort parameter file instead of a built-in family");
  solve->add_option("--t-end", solve_args.t_end, "Last age on the grid (years)");
  solve->add_option("--step", solve_args.step, "Grid step (years)");
  solve->add_option("--out", solve_args.out, "Output CSV path, '-' for stdout");

  SimulateArgs sim_args;
  PolicyArgs sim_policy;
  ConfigArgs sim_cfg;
  auto* simulate = app.add_subcommand("simulate", "Run one episode and write its step log");
  simulate->add_option("--policy", sim_args.policy, "cbm|schm|rm or a .policy.json file");
  simulate->add_option("--start-age", sim_args.start_age, "Pipe age at reset (years)");
  simulate->add_option("--seed", sim_args.seed, "Episode seed");
  simulate->add_option("--out", sim_args.out, "Output directory");
  simulate->add_flag("--json", sim_args.json_output, "Print the episode as one JSON document instead of writing CSV");
  add_heuristic_flags(simulate, sim_policy);
  add_config_flags(simulate, sim_cfg);

  EvaluateArgs eval_args;
  PolicyArgs eval_policy;
  ConfigArgs eval_cfg;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Monte Carlo comparison of policies on common seeds");
  evaluate_cmd->add_option("--policies", eval_args.policies, "Comma-separated cbm|schm|rm|<file.policy.json>")
      ->delimiter(',');
  evaluate_cmd->add_option("--ages", eval_args.ages, "Comma-separated start ages (years)")->delimiter(',');
  evaluate_cmd->add_option("--episodes", eval_args.episodes, "Episodes per policy and start age");
  evaluate_cmd->add_option("--seed", eval_args.seed, "First episode seed");
  evaluate_cmd->add_option("--jobs", eval_args.jobs, "Worker threads");
  evaluate_cmd->add_option("--out", eval_args.out, "Output directory");
  evaluate_cmd->add_flag("--json", eval_args.json_output, "Print all statistics as one JSON document");
  evaluate_cmd->add_flag("--episode-logs", eval_args.episode_logs, "Also write every episode log CSV");
  add_heuristic_flags(evaluate_cmd, eval_policy);
  add_config_flags(evaluate_cmd, eval_cfg);

  ServeArgs serve_args;
  ConfigArgs serve_cfg;
  auto* serve = app.add_subcommand("serve", "Serve the environment over the JSON-lines protocol");
  serve->add_option("--endpoint", serve_args.endpoint, "stdio | unix:<path> | tcp:<host>:<port>");
  add_config_flags(serve, serve_cfg);

  std::string manifest_path, rerun_out;
  auto* rerun = app.add_subcommand("rerun", "Reproduce an output set from its manifest.json");
  rerun->add_option("manifest", manifest_path, "Path to manifest.json")->required();
  rerun->add_option("--out", rerun_out, "Write to this location instead of the recorded one");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "pipemdp: " << e.what() << "\n";
    return kArgs;
  }

  try {
    if (*solve) return do_solve(solve_args, out);
    if (*simulate) return do_simulate(sim_args, sim_policy, resolve_config(sim_cfg), out);
    if (*evaluate_cmd) return do_evaluate(eval_args, eval_policy, resolve_config(eval_cfg), out);
    if (*serve) return do_serve(serve_args, resolve_config(serve_cfg), err);
    if (*rerun) return do_rerun(manifest_path, rerun_out, out);
  } catch (const IoError& e) {
    err << "pipemdp: " << e.what() << "\n";
    return kIo;
  } catch (const BindError& e) {
    err << "pipemdp: " << e.what() << "\n";
    return kBind;
  } catch (const IntegrationError& e) {
    err << "pipemdp: numerical failure: " << e.what() << "\n";
    return kNumerics;
  } catch (const SingularityError& e) {
    err << "pipemdp: numerical failure: " << e.what() << "\n";
    return kNumerics;
  } catch (const FormatError& e) {
    err << "pipemdp: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "pipemdp: " << e.what() << "\n";
    return kArgs;
  }
  return kArgs;
}

}  // namespace pipemdp::cli
