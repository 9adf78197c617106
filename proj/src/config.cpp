#include "pipemdp/config.hpp"

#include <fstream>

#include "pipemdp/errors.hpp"

namespace pipemdp {

using nlohmann::json;

namespace {

json cohort_to_json(const CohortParameters& c) {
  json t = json::object();
  for (int e = 0; e < kEdgeCount; ++e) {
    const auto edge = static_cast<Edge>(e);
    const auto& spec = c.hazards.get(edge);
    if (!spec) continue;
    switch (spec->family()) {
      case HazardFamily::Exponential: t[std::string(edge_label(edge))] = {{"epsilon", spec->p0()}}; break;
      case HazardFamily::Gompertz: t[std::string(edge_label(edge))] = {{"alpha", spec->p0()}, {"beta", spec->p1()}}; break;
      case HazardFamily::Weibull: t[std::string(edge_label(edge))] = {{"eta", spec->p0()}, {"rho", spec->p1()}}; break;
    }
  }
  return {{"family", std::string(to_string(c.family))}, {"transitions", t}, {"S0", c.initial}};
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

std::shared_ptr<const DegradationModel> load_model(const json& spec, json* resolved) {
  try {
    if (spec.is_string()) {
      const auto family = parse_family(spec.get<std::string>());
      if (!family) throw ConfigError("unknown model family '" + spec.get<std::string>() + "'");
      if (resolved) *resolved = spec;
      return std::make_shared<const DegradationModel>(DegradationModel::builtin(*family));
    }
    if (!spec.is_object()) throw ConfigError("model must be a family name or an object");
    if (spec.contains("file")) {
      const auto cohort = load_cohort_json(spec.at("file").get<std::string>());
      if (resolved) *resolved = cohort_to_json(cohort);
      return std::make_shared<const DegradationModel>(DegradationModel::from_cohort(cohort));
    }
    if (spec.value("family", "") == "zero") {
      SeverityVector s0 = {1, 0, 0, 0, 0, 0};
      if (spec.contains("S0")) s0 = renormalize(spec.at("S0").get<SeverityVector>());
      if (resolved) *resolved = {{"family", "zero"}, {"S0", s0}};
      return std::make_shared<const DegradationModel>(DegradationModel::zero_rate(s0));
    }
    if (spec.contains("transitions")) {
      const auto cohort = parse_cohort_json(spec.dump());
      if (resolved) *resolved = cohort_to_json(cohort);
      return std::make_shared<const DegradationModel>(DegradationModel::from_cohort(cohort));
    }
    if (spec.contains("family")) return load_model(spec.at("family"), resolved);
    throw ConfigError("model object needs 'file', 'transitions' or 'family'");
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model specification: ") + e.what());
  }
}

LoadedConfig load_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const char* known[] = {"length_m", "segment_m", "diameter_mm", "decision_interval", "horizon",
                                "dynamics", "prognosis", "initial_age", "failure_penalty", "logistic_cost",
                                "maintenance_cost", "seed"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  LoadedConfig out;
  EnvConfig& c = out.env;
  c.length_m = get_or(doc, "length_m", c.length_m);
  c.segment_m = get_or(doc, "segment_m", c.segment_m);
  c.diameter_mm = get_or(doc, "diameter_mm", c.diameter_mm);
  c.decision_interval = get_or(doc, "decision_interval", c.decision_interval);
  c.horizon = get_or(doc, "horizon", c.horizon);
  c.failure_penalty = get_or(doc, "failure_penalty", c.failure_penalty);
  c.logistic_cost = get_or(doc, "logistic_cost", c.logistic_cost);
  c.maintenance_cost = get_or(doc, "maintenance_cost", c.maintenance_cost);
  c.seed = get_or<std::uint64_t>(doc, "seed", c.seed);
  const auto ages = get_or(doc, "initial_age", std::array<double, 2>{c.initial_age_lo, c.initial_age_hi});
  c.initial_age_lo = ages[0];
  c.initial_age_hi = ages[1];

  json dyn_resolved, prog_resolved;
  const json dyn_spec = doc.value("dynamics", json("weibull"));
  c.dynamics = load_model(dyn_spec, &dyn_resolved);
  if (doc.contains("prognosis")) {
    c.prognosis = load_model(doc.at("prognosis"), &prog_resolved);
  } else {
    c.prognosis = c.dynamics;
    prog_resolved = dyn_resolved;
  }
  c.validate();

  out.resolved = {{"length_m", c.length_m},
                  {"segment_m", c.segment_m},
                  {"diameter_mm", c.diameter_mm},
                  {"decision_interval", c.decision_interval},
                  {"horizon", c.horizon},
                  {"dynamics", dyn_resolved},
                  {"prognosis", prog_resolved},
                  {"initial_age", {c.initial_age_lo, c.initial_age_hi}},
                  {"failure_penalty", c.failure_penalty},
                  {"logistic_cost", c.logistic_cost},
                  {"maintenance_cost", c.maintenance_cost},
                  {"seed", c.seed}};
  return out;
}

LoadedConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return load_config(doc);
}

}  // namespace pipemdp
