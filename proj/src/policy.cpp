#include "vransplit/policy.hpp"

#include <algorithm>
#include <cmath>

#include "vransplit/error.hpp"
#include "vransplit/rng.hpp"

namespace vransplit {

namespace {

double ratio(double value, double scale) {
  if (!(scale > 0.0)) return 0.0;
  return std::clamp(value / scale, 0.0, 1.0);
}

double cost_per_compute(const Scenario& s, std::size_t du) {
  const auto& p = s.profiles[du];
  if (!(p.compute_cost_du > 0.0)) return 0.0;
  return s.params.routing_cost_scale * s.route(du).total_routing_cost / p.compute_cost_du;
}

}  // namespace

FeatureScales feature_scales(const Scenario& s) {
  FeatureScales f{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    f.lambda_mbps = std::max(f.lambda_mbps, s.profiles[i].lambda_mbps);
    f.delay_us = std::max(f.delay_us, s.route(i).total_delay_us);
    f.routing_cost = std::max(f.routing_cost, cost_per_compute(s, i));
  }
  return f;
}

Features featurize_one(const Scenario& s, std::size_t du, const FeatureScales& scales) {
  const auto& p = s.profiles.at(du);
  const double dran_load = p.lambda_mbps * s.params.splits[index_of(Split::S0)].rho_du;
  const double headroom = p.du_capacity_rc > 0.0 ? std::clamp(1.0 - dran_load / p.du_capacity_rc, 0.0, 1.0) : 0.0;
  return {ratio(p.lambda_mbps, scales.lambda_mbps), ratio(s.route(du).total_delay_us, scales.delay_us),
          ratio(cost_per_compute(s, du), scales.routing_cost), headroom};
}

std::vector<Features> featurize(const Scenario& s, const FeatureScales& scales) {
  std::vector<Features> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back(featurize_one(s, i, scales));
  return out;
}

std::vector<Features> featurize(const Scenario& s, const FeatureScales& scales, std::span<const std::size_t> order) {
  if (order.size() != s.size()) throw InputError("order length differs from the DU count");
  std::vector<Features> out;
  out.reserve(order.size());
  for (std::size_t k : order) out.push_back(featurize_one(s, k, scales));
  return out;
}

Policy::Policy(PolicyConfig config) : config_(config) {
  const std::size_t h = config_.hidden;
  const std::size_t e = config_.embedding;
  embed_w_ = params_.add("embed.w", {e, kFeatureCount});
  embed_b_ = params_.add("embed.b", {e});
  encoder_ = add_lstm(params_, "enc", e, h);
  decision_embed_ = params_.add("dec.embed", {kSplitCount + 1, e});
  decoder_ = add_lstm(params_, "dec", e + h, h);
  attention_ = add_attention(params_, "attn", h);
  head_w_ = params_.add("head.w", {kSplitCount, 2 * h});
  head_b_ = params_.add("head.b", {kSplitCount});
}

void Policy::initialize(Rng& rng) {
  params_.init_uniform_fan_in(rng);
  set_forget_bias(params_, encoder_);
  set_forget_bias(params_, decoder_);
}

EncodedSequence Policy::encode(Tape& tape, std::span<const Features> features) const {
  if (features.empty()) throw ShapeError("cannot encode an empty sequence");
  EncodedSequence out;
  LstmState state = lstm_zero_state(tape, config_.hidden);
  const Var w = tape.param(embed_w_);
  const Var b = tape.param(embed_b_);
  out.rows.reserve(features.size());
  for (const auto& f : features) {
    const Var x = tape.affine(w, tape.constant(f), b);
    state = lstm_step(tape, encoder_, x, state);
    out.rows.push_back(state.h);
  }
  out.states = tape.stack_rows(out.rows);
  out.keys = attention_keys(tape, attention_, out.states);
  out.final_state = state;
  return out;
}

Rollout Policy::decode(Tape& tape, const EncodedSequence& enc, const DecodeOptions& options, Rng& rng) const {
  const std::size_t n = enc.rows.size();
  if (!options.forced.empty() && options.forced.size() != n) throw ShapeError("forced decisions length mismatch");
  if (!(options.temperature > 0.0)) throw ParameterError("temperature must be positive");
  Rollout r;
  r.splits.reserve(n);
  r.step_log_probs.reserve(n);
  std::vector<Var> step_vars;
  step_vars.reserve(n);

  const Var table = tape.param(decision_embed_);
  const Var head_w = tape.param(head_w_);
  const Var head_b = tape.param(head_b_);
  const bool tempered = options.log_prob == LogProbMode::Tempered && options.temperature != 1.0;

  LstmState state = enc.final_state;
  std::size_t prev = kStartToken;
  for (std::size_t t = 0; t < n; ++t) {
    const std::array<Var, 2> in{tape.row(table, prev), enc.rows[t]};
    state = lstm_step(tape, decoder_, tape.concat(in), state);
    const auto att = attention_context(tape, attention_, state.h, enc.keys, enc.states);
    const std::array<Var, 2> hc{state.h, att.context};
    const Var logits = tape.affine(head_w, tape.concat(hc), head_b);

    std::size_t choice = 0;
    if (!options.forced.empty()) {
      choice = index_of(options.forced[t]);
    } else {
      choice = softmax_sample(tape.value(logits), options.temperature, rng, options.mode).index;
    }
    const Var lp = tape.pick(tape.log_softmax(tempered ? tape.scale(logits, 1.0 / options.temperature) : logits),
                             choice);
    step_vars.push_back(lp);
    r.step_log_probs.push_back(tape.scalar(lp));
    r.log_prob += r.step_log_probs.back();
    r.splits.push_back(split_from_index(choice));
    prev = choice;
  }
  r.log_prob_var = tape.add_n(step_vars);
  return r;
}

Critic::Critic(PolicyConfig config, double output_scale) : config_(config), output_scale_(output_scale) {
  encoder_ = add_lstm(params_, "critic.enc", kFeatureCount, config_.hidden);
  const std::array<std::size_t, 3> sizes{config_.hidden, config_.hidden, 1};
  head_ = add_mlp(params_, "critic.mlp", sizes);
}

void Critic::initialize(Rng& rng) {
  params_.init_uniform_fan_in(rng);
  set_forget_bias(params_, encoder_);
}

Var Critic::value(Tape& tape, std::span<const Features> features) const {
  if (features.empty()) throw ShapeError("critic over an empty sequence");
  LstmState state = lstm_zero_state(tape, config_.hidden);
  for (const auto& f : features) state = lstm_step(tape, encoder_, tape.constant(f), state);
  return tape.scale(tape.pick(mlp_forward(tape, head_, state.h), 0), output_scale_);
}

Assignment unpermute(std::span<const Split> sequence, std::span<const std::size_t> order) {
  if (sequence.size() != order.size()) throw ShapeError("sequence and order lengths differ");
  Assignment out(order.size(), Split::S0);
  for (std::size_t k = 0; k < order.size(); ++k) out.at(order[k]) = sequence[k];
  return out;
}

}  // namespace vransplit
