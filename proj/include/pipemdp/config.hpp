#pragma once

#include <string>

#include <json.hpp>

#include "pipemdp/pipe_env.hpp"

namespace pipemdp {

/// Environment configuration as JSON. Every key is optional:
///
///   {"length_m": 40, "segment_m": 1, "diameter_mm": 200,
///    "decision_interval": 0.5, "horizon": 100,
///    "dynamics": "weibull", "prognosis": "weibull",
///    "initial_age": [0, 50],
///    "failure_penalty": 100000, "logistic_cost": 500,
///    "maintenance_cost": [0, 0, 500, 700, 900],
///    "seed": 0}
///
/// A model is a family name ("exponential", "gompertz", "weibull"), an
/// object {"file": "cohort.json"}, an inline cohort object with
/// "family"/"transitions"/"S0", or {"family": "zero", "S0": [...]}.
struct LoadedConfig {
  EnvConfig env;
  // Same document with defaults filled in and model files inlined, so it
  // reproduces `env` without touching the filesystem.
  nlohmann::json resolved;
};

/// Throws ConfigError.
LoadedConfig load_config(const nlohmann::json& doc);
LoadedConfig load_config_file(const std::string& path);

std::shared_ptr<const DegradationModel> load_model(const nlohmann::json& spec, nlohmann::json* resolved = nullptr);

}  // namespace pipemdp
