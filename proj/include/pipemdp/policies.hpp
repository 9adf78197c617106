#pragma once

#include <array>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pipemdp/pipe_env.hpp"

namespace pipemdp {

/// Per-episode bookkeeping a policy may consult. Owned by whoever drives
/// the episode; policies themselves stay immutable.
struct DecisionContext {
  // Infinity until the first maintenance or replacement of the episode.
  double years_since_maintenance = std::numeric_limits<double>::infinity();
};

struct CbmParams {
  double age_limit = 70.0;
  double h4_threshold = 0.1;
  double h5_threshold = 0.05;
};

struct SchmParams {
  double maintenance_period = 10.0;  // years
};

// Condition-based: replace when old or failed, maintain when damage is visible.
Action cbm_decide(const Observation& obs, const CbmParams& params = {});
// Scheduled: replace on failure, maintain on a fixed period.
Action schm_decide(const Observation& obs, const SchmParams& params, double years_since_maintenance);
// Reactive: replace on failure only.
Action rm_decide(const Observation& obs);

enum class Activation { Sigmoid, Tanh, Relu };

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<float> weight;  // out x in, row-major
  std::vector<float> bias;    // out
};

/// Multilayer perceptron weights: hidden layers use `activation`, the final
/// layer is linear and produces one score per action.
struct NeuralPolicyWeights {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::Sigmoid;
  // Network input = (obs - obs_offset) * obs_scale.
  std::array<float, kObsDim> obs_offset{};
  std::array<float, kObsDim> obs_scale{};

  /// Sizes 13 -> hidden... -> 3 with every parameter zero and the default
  /// normalization (age / 100, everything else unchanged).
  static NeuralPolicyWeights zeros(const std::vector<int>& hidden = {32, 32, 32});

  /// Throws ShapeError when layer sizes do not chain from 13 inputs to 3 outputs.
  void validate() const;
};

std::array<float, kActionCount> neural_scores(const Observation& obs, const NeuralPolicyWeights& w);
/// argmax of the scores, ties to the lowest action index.
Action neural_decide(const Observation& obs, const NeuralPolicyWeights& w);

/// `.policy.json`: JSON header with shapes, activation and normalization;
/// each matrix and bias is little-endian float32, row-major, base64-encoded.
std::string serialize_policy(const NeuralPolicyWeights& w);
/// Throws FormatError on malformed content and ShapeError on inconsistent shapes.
NeuralPolicyWeights parse_policy(std::string_view text);
void save_policy(const NeuralPolicyWeights& w, const std::string& path);
NeuralPolicyWeights load_policy(const std::string& path);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Action decide(const Observation& obs, const DecisionContext& ctx) const = 0;
};

class CbmPolicy final : public Policy {
 public:
  explicit CbmPolicy(CbmParams p = {}) : params_(p) {}
  std::string name() const override { return "cbm"; }
  Action decide(const Observation& obs, const DecisionContext&) const override { return cbm_decide(obs, params_); }

 private:
  CbmParams params_;
};

class SchmPolicy final : public Policy {
 public:
  explicit SchmPolicy(SchmParams p = {}) : params_(p) {}
  std::string name() const override { return "schm"; }
  Action decide(const Observation& obs, const DecisionContext& ctx) const override {
    return schm_decide(obs, params_, ctx.years_since_maintenance);
  }

 private:
  SchmParams params_;
};

class RmPolicy final : public Policy {
 public:
  std::string name() const override { return "rm"; }
  Action decide(const Observation& obs, const DecisionContext&) const override { return rm_decide(obs); }
};

class NeuralPolicy final : public Policy {
 public:
  NeuralPolicy(NeuralPolicyWeights w, std::string name);
  std::string name() const override { return name_; }
  Action decide(const Observation& obs, const DecisionContext&) const override { return neural_decide(obs, weights_); }
  const NeuralPolicyWeights& weights() const { return weights_; }

 private:
  NeuralPolicyWeights weights_;
  std::string name_;
};

struct HeuristicParams {
  CbmParams cbm;
  SchmParams schm;
};

/// "cbm", "schm", "rm", or a path to a `.policy.json` file (policy named
/// after the file stem). Throws FormatError for unreadable policy files and
/// DomainError for unknown names.
std::shared_ptr<const Policy> make_policy(const std::string& spec, const HeuristicParams& params = {});

}  // namespace pipemdp
