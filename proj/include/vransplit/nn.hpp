#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vransplit/tape.hpp"
#include "vransplit/tensor.hpp"

namespace vransplit {

class Rng;

/// One LSTM layer. Gates are stacked i, f, g, o in the rows of w_ih,
/// w_hh and b.
struct LstmCell {
  ParamId w_ih = 0;  // 4H x input
  ParamId w_hh = 0;  // 4H x H
  ParamId b = 0;     // 4H
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
};

LstmCell add_lstm(ParameterSet& params, const std::string& scope, std::size_t input_size, std::size_t hidden_size);
/// Sets the forget-gate slice of the bias.
void set_forget_bias(ParameterSet& params, const LstmCell& cell, double value = 1.0);

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_zero_state(Tape& tape, std::size_t hidden_size);
LstmState lstm_step(Tape& tape, const LstmCell& cell, Var input, LstmState state);

/// Additive attention: score_k = v . tanh(w1 h + w2 hbar_k).
struct Attention {
  ParamId w1 = 0;  // H x H
  ParamId w2 = 0;  // H x H
  ParamId v = 0;   // H
  std::size_t hidden_size = 0;
};

Attention add_attention(ParameterSet& params, const std::string& scope, std::size_t hidden_size);

/// The w2 hbar_k half of every score, computed once per encoded sequence.
Var attention_keys(Tape& tape, const Attention& attn, Var encoder_states);

struct AttentionOutput {
  Var context;
  Var alignment;
};

AttentionOutput attention_context(Tape& tape, const Attention& attn, Var query, Var keys, Var encoder_states);

/// Fully connected stack: tanh after every layer but the last.
struct Mlp {
  std::vector<ParamId> weights;
  std::vector<ParamId> biases;
};

Mlp add_mlp(ParameterSet& params, const std::string& scope, std::span<const std::size_t> sizes);
Var mlp_forward(Tape& tape, const Mlp& mlp, Var input);

enum class SampleMode { Sample, Greedy };
enum class LogProbMode { Policy, Tempered };

struct SampleResult {
  std::size_t index = 0;
  double log_prob = 0.0;
};

/// Draws from softmax(logits / temperature), or takes the argmax (lowest
/// index on ties) in greedy mode. log_prob is taken under the unit
/// temperature distribution (Policy) or the tempered one (Tempered).
SampleResult softmax_sample(std::span<const double> logits, double temperature, Rng& rng,
                            SampleMode mode = SampleMode::Sample, LogProbMode log_prob_mode = LogProbMode::Policy);

/// log softmax(logits / temperature)
std::vector<double> log_softmax(std::span<const double> logits, double temperature = 1.0);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const ParameterSet& params);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

void adam_update(ParameterSet& params, const GradientSet& grads, AdamState& state, double lr);

double global_norm(const GradientSet& grads);
/// Rescales grads so their global norm is at most max_norm; returns the
/// norm before clipping.
double clip_global_norm(GradientSet& grads, double max_norm);

}  // namespace vransplit
