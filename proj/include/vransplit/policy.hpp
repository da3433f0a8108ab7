#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "vransplit/nn.hpp"
#include "vransplit/tape.hpp"
#include "vransplit/tensor.hpp"
#include "vransplit/vran_model.hpp"

namespace vransplit {

class Rng;

/// Per-BS input: traffic, path delay, path routing cost relative to the DU
/// compute price, and DU capacity headroom under the D-RAN split. Every
/// component lies in [0, 1].
inline constexpr std::size_t kFeatureCount = 4;
using Features = std::array<double, kFeatureCount>;

/// Normalizers, fixed per training instance so that load and cost
/// rescalings remain visible to the policy.
struct FeatureScales {
  double lambda_mbps = 1.0;
  double delay_us = 1.0;
  double routing_cost = 1.0;  // max of scale * zeta / beta_n
};

/// Instance-wide maxima of `scenario`.
FeatureScales feature_scales(const Scenario& scenario);

Features featurize_one(const Scenario& scenario, std::size_t du, const FeatureScales& scales);
std::vector<Features> featurize(const Scenario& scenario, const FeatureScales& scales);
/// Features listed in `order` (order[k] is the DU index at position k).
std::vector<Features> featurize(const Scenario& scenario, const FeatureScales& scales,
                                std::span<const std::size_t> order);

struct PolicyConfig {
  std::size_t hidden = 32;
  std::size_t embedding = 32;
};

struct EncodedSequence {
  std::vector<Var> rows;  // hbar_1..hbar_N
  Var states;             // N x H
  Var keys;               // N x H, w2 hbar_k
  LstmState final_state;
};

struct DecodeOptions {
  SampleMode mode = SampleMode::Sample;
  double temperature = 1.0;
  LogProbMode log_prob = LogProbMode::Policy;
  /// When non-empty, decisions are taken from here instead of sampled.
  std::span<const Split> forced{};
};

/// One decoded split sequence, in input order.
struct Rollout {
  Assignment splits;
  std::vector<double> step_log_probs;
  double log_prob = 0.0;
  Var log_prob_var;  // differentiable sum of the step log-probabilities
};

/// Encoder-decoder agent. The decoder at step t reads the embedding of
/// the previous decision together with hbar_t and attends over all
/// encoder states; logits are an affine map of [h_t; c_t].
class Policy {
 public:
  explicit Policy(PolicyConfig config = {});

  /// Fan-in uniform weights, zero biases, forget biases at 1.
  void initialize(Rng& rng);

  const PolicyConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  EncodedSequence encode(Tape& tape, std::span<const Features> features) const;
  Rollout decode(Tape& tape, const EncodedSequence& encoded, const DecodeOptions& options, Rng& rng) const;

  /// Start token row of the decision embedding.
  static constexpr std::size_t kStartToken = kSplitCount;

 private:
  PolicyConfig config_;
  ParameterSet params_;
  ParamId embed_w_ = 0;
  ParamId embed_b_ = 0;
  LstmCell encoder_;
  ParamId decision_embed_ = 0;
  LstmCell decoder_;
  Attention attention_;
  ParamId head_w_ = 0;
  ParamId head_b_ = 0;
};

/// Baseline b(F): LSTM over the raw features, MLP on the final hidden
/// state, multiplied by a fixed output scale so the untrained network
/// already speaks in cost units.
class Critic {
 public:
  explicit Critic(PolicyConfig config = {}, double output_scale = 1.0);

  void initialize(Rng& rng);

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  double output_scale() const { return output_scale_; }
  void set_output_scale(double scale) { output_scale_ = scale; }

  Var value(Tape& tape, std::span<const Features> features) const;

 private:
  PolicyConfig config_;
  double output_scale_;
  ParameterSet params_;
  LstmCell encoder_;
  Mlp head_;
};

/// Maps a rollout over a permuted sequence back to DU order.
Assignment unpermute(std::span<const Split> sequence, std::span<const std::size_t> order);

}  // namespace vransplit
