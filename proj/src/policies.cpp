#include "pipemdp/policies.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pipemdp/base64.hpp"
#include "pipemdp/errors.hpp"

namespace pipemdp {

namespace {

double h_of(const Observation& obs, int k) { return obs[kObsHealth + k]; }

bool any_failed(const Observation& obs) { return h_of(obs, kFailed) > 0.0; }

float activate(Activation a, float x) {
  switch (a) {
    case Activation::Sigmoid: return 1.0f / (1.0f + std::exp(-x));
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return x > 0.0f ? x : 0.0f;
  }
  return x;
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw FormatError("unknown activation '" + s + "'");
}

std::string encode_floats(const std::vector<float>& v) {
  std::vector<std::uint8_t> bytes(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(v[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<float> decode_floats(std::string_view text, std::size_t expected, const char* what) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expected * 4) {
    throw FormatError(std::string(what) + ": decoded " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected * 4));
  }
  std::vector<float> v(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    v[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(v[i])) throw FormatError(std::string(what) + " contains a non-finite value");
  }
  return v;
}

}  // namespace

Action cbm_decide(const Observation& obs, const CbmParams& params) {
  if (obs[kObsAge] >= params.age_limit || any_failed(obs)) return Action::Replace;
  if (h_of(obs, 3) >= params.h4_threshold || h_of(obs, 4) >= params.h5_threshold) return Action::Maintain;
  return Action::DoNothing;
}

Action schm_decide(const Observation& obs, const SchmParams& params, double years_since_maintenance) {
  if (any_failed(obs)) return Action::Replace;
  // Half-year steps accumulate exactly, the tolerance covers other intervals.
  if (years_since_maintenance >= params.maintenance_period - 1e-9) return Action::Maintain;
  return Action::DoNothing;
}

Action rm_decide(const Observation& obs) { return any_failed(obs) ? Action::Replace : Action::DoNothing; }

NeuralPolicyWeights NeuralPolicyWeights::zeros(const std::vector<int>& hidden) {
  NeuralPolicyWeights w;
  int in = kObsDim;
  std::vector<int> sizes = hidden;
  sizes.push_back(kActionCount);
  for (int out : sizes) {
    DenseLayer layer;
    layer.in = in;
    layer.out = out;
    layer.weight.assign(static_cast<std::size_t>(in) * out, 0.0f);
    layer.bias.assign(out, 0.0f);
    w.layers.push_back(std::move(layer));
    in = out;
  }
  w.obs_scale.fill(1.0f);
  w.obs_scale[kObsAge] = 0.01f;
  return w;
}

void NeuralPolicyWeights::validate() const {
  if (layers.empty()) throw ShapeError("policy network has no layers");
  int expected_in = kObsDim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in != expected_in) {
      throw ShapeError("layer " + std::to_string(i) + " expects " + std::to_string(l.in) + " inputs, previous layer gives " +
                       std::to_string(expected_in));
    }
    if (l.out <= 0) throw ShapeError("layer " + std::to_string(i) + " has no outputs");
    if (l.weight.size() != static_cast<std::size_t>(l.in) * l.out || l.bias.size() != static_cast<std::size_t>(l.out)) {
      throw ShapeError("layer " + std::to_string(i) + " parameter count does not match its shape");
    }
    expected_in = l.out;
  }
  if (expected_in != kActionCount) throw ShapeError("policy network must output 3 action scores");
}

std::array<float, kActionCount> neural_scores(const Observation& obs, const NeuralPolicyWeights& w) {
  w.validate();
  std::vector<float> x(kObsDim);
  for (int i = 0; i < kObsDim; ++i) {
    x[i] = (static_cast<float>(obs[i]) - w.obs_offset[i]) * w.obs_scale[i];
  }
  std::vector<float> y;
  for (std::size_t li = 0; li < w.layers.size(); ++li) {
    const auto& l = w.layers[li];
    const bool hidden = li + 1 < w.layers.size();
    y.assign(l.out, 0.0f);
    for (int o = 0; o < l.out; ++o) {
      float acc = l.bias[o];
      const float* row = l.weight.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) acc += row[i] * x[i];
      y[o] = hidden ? activate(w.activation, acc) : acc;
    }
    x.swap(y);
  }
  return {x[0], x[1], x[2]};
}

Action neural_decide(const Observation& obs, const NeuralPolicyWeights& w) {
  const auto scores = neural_scores(obs, w);
  int best = 0;
  for (int a = 1; a < kActionCount; ++a) {
    if (scores[a] > scores[best]) best = a;
  }
  return static_cast<Action>(best);
}

std::string serialize_policy(const NeuralPolicyWeights& w) {
  w.validate();
  nlohmann::json doc;
  doc["format"] = "pipemdp-policy";
  doc["version"] = 1;
  doc["activation"] = activation_name(w.activation);
  doc["obs_offset"] = w.obs_offset;
  doc["obs_scale"] = w.obs_scale;
  auto& layers = doc["layers"] = nlohmann::json::array();
  for (const auto& l : w.layers) {
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weight", encode_floats(l.weight)}, {"bias", encode_floats(l.bias)}});
  }
  return doc.dump(2) + "\n";
}

NeuralPolicyWeights parse_policy(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("policy file is not valid JSON: ") + e.what());
  }
  NeuralPolicyWeights w;
  try {
    if (doc.at("format").get<std::string>() != "pipemdp-policy") throw FormatError("not a pipemdp policy file");
    if (doc.at("version").get<int>() != 1) throw FormatError("unsupported policy file version");
    w.activation = parse_activation(doc.at("activation").get<std::string>());
    w.obs_offset = doc.at("obs_offset").get<std::array<float, kObsDim>>();
    w.obs_scale = doc.at("obs_scale").get<std::array<float, kObsDim>>();
    for (const auto& jl : doc.at("layers")) {
      DenseLayer l;
      l.in = jl.at("in").get<int>();
      l.out = jl.at("out").get<int>();
      if (l.in <= 0 || l.out <= 0) throw ShapeError("layer dimensions must be positive");
      l.weight = decode_floats(jl.at("weight").get<std::string>(), static_cast<std::size_t>(l.in) * l.out, "weight");
      l.bias = decode_floats(jl.at("bias").get<std::string>(), static_cast<std::size_t>(l.out), "bias");
      w.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed policy file: ") + e.what());
  }
  w.validate();
  return w;
}

void save_policy(const NeuralPolicyWeights& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write policy file " + path);
  out << serialize_policy(w);
}

NeuralPolicyWeights load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open policy file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_policy(ss.str());
}

NeuralPolicy::NeuralPolicy(NeuralPolicyWeights w, std::string name) : weights_(std::move(w)), name_(std::move(name)) {
  weights_.validate();
}

std::shared_ptr<const Policy> make_policy(const std::string& spec, const HeuristicParams& params) {
  if (spec == "cbm") return std::make_shared<CbmPolicy>(params.cbm);
  if (spec == "schm") return std::make_shared<SchmPolicy>(params.schm);
  if (spec == "rm") return std::make_shared<RmPolicy>();
  namespace fs = std::filesystem;
  if (spec.ends_with(".json") || fs::exists(spec)) {
    std::string stem = fs::path(spec).filename().string();
    if (auto pos = stem.find(".policy.json"); pos != std::string::npos) stem = stem.substr(0, pos);
    else if (stem.ends_with(".json")) stem = stem.substr(0, stem.size() - 5);
    return std::make_shared<NeuralPolicy>(load_policy(spec), stem);
  }
  throw DomainError("unknown policy '" + spec + "' (expected cbm, schm, rm or a .policy.json file)");
}

}  // namespace pipemdp
