#include "vransplit/nn.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "vransplit/error.hpp"
#include "vransplit/rng.hpp"

namespace vransplit {

LstmCell add_lstm(ParameterSet& params, const std::string& scope, std::size_t input_size, std::size_t hidden_size) {
  if (input_size == 0 || hidden_size == 0) throw ShapeError("LSTM sizes must be positive");
  LstmCell cell;
  cell.input_size = input_size;
  cell.hidden_size = hidden_size;
  cell.w_ih = params.add(scope + ".w_ih", {4 * hidden_size, input_size});
  cell.w_hh = params.add(scope + ".w_hh", {4 * hidden_size, hidden_size});
  cell.b = params.add(scope + ".b", {4 * hidden_size});
  return cell;
}

void set_forget_bias(ParameterSet& params, const LstmCell& cell, double value) {
  auto& b = params[cell.b].value.values;
  std::fill(b.begin() + static_cast<std::ptrdiff_t>(cell.hidden_size),
            b.begin() + static_cast<std::ptrdiff_t>(2 * cell.hidden_size), value);
}

LstmState lstm_zero_state(Tape& tape, std::size_t hidden_size) {
  const std::vector<double> zeros(hidden_size, 0.0);
  return {tape.constant(zeros), tape.constant(zeros)};
}

LstmState lstm_step(Tape& tape, const LstmCell& cell, Var input, LstmState state) {
  const std::size_t h = cell.hidden_size;
  if (tape.size(input) != cell.input_size) throw ShapeError("LSTM input size mismatch");
  if (tape.size(state.h) != h || tape.size(state.c) != h) throw ShapeError("LSTM state size mismatch");
  const Var pre = tape.add(tape.affine(tape.param(cell.w_ih), input, tape.param(cell.b)),
                           tape.matvec(tape.param(cell.w_hh), state.h));
  const Var i = tape.sigmoid(tape.slice(pre, 0, h));
  const Var f = tape.sigmoid(tape.slice(pre, h, h));
  const Var g = tape.tanh(tape.slice(pre, 2 * h, h));
  const Var o = tape.sigmoid(tape.slice(pre, 3 * h, h));
  const Var c = tape.add(tape.mul(f, state.c), tape.mul(i, g));
  return {tape.mul(o, tape.tanh(c)), c};
}

Attention add_attention(ParameterSet& params, const std::string& scope, std::size_t hidden_size) {
  Attention a;
  a.hidden_size = hidden_size;
  a.w1 = params.add(scope + ".w1", {hidden_size, hidden_size});
  a.w2 = params.add(scope + ".w2", {hidden_size, hidden_size});
  a.v = params.add(scope + ".v", {hidden_size});
  return a;
}

Var attention_keys(Tape& tape, const Attention& attn, Var encoder_states) {
  if (tape.rows(encoder_states) == 0) throw ShapeError("attention over an empty encoder sequence");
  return tape.matmul_nt(encoder_states, tape.param(attn.w2));
}

AttentionOutput attention_context(Tape& tape, const Attention& attn, Var query, Var keys, Var encoder_states) {
  if (tape.rows(encoder_states) == 0) throw ShapeError("attention over an empty encoder sequence");
  const Var q = tape.matvec(tape.param(attn.w1), query);
  const Var scores = tape.additive_scores(q, keys, tape.param(attn.v));
  const Var alignment = tape.softmax(scores);
  return {tape.weighted_rows(alignment, encoder_states), alignment};
}

Mlp add_mlp(ParameterSet& params, const std::string& scope, std::span<const std::size_t> sizes) {
  if (sizes.size() < 2) throw ShapeError("an MLP needs input and output sizes");
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::string n = std::to_string(l);
    mlp.weights.push_back(params.add(scope + ".w" + n, {sizes[l + 1], sizes[l]}));
    mlp.biases.push_back(params.add(scope + ".b" + n, {sizes[l + 1]}));
  }
  return mlp;
}

Var mlp_forward(Tape& tape, const Mlp& mlp, Var input) {
  Var x = input;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    x = tape.affine(tape.param(mlp.weights[l]), x, tape.param(mlp.biases[l]));
    if (l + 1 < mlp.weights.size()) x = tape.tanh(x);
  }
  return x;
}

std::vector<double> log_softmax(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw ShapeError("softmax over no logits");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ParameterError("temperature must be positive");
  std::vector<double> out(logits.size());
  double mx = -INFINITY;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw NumericError("non-finite logit");
    out[i] = logits[i] / temperature;
    mx = std::max(mx, out[i]);
  }
  double z = 0.0;
  for (double x : out) z += std::exp(x - mx);
  const double lse = mx + std::log(z);
  for (double& x : out) x -= lse;
  return out;
}

SampleResult softmax_sample(std::span<const double> logits, double temperature, Rng& rng, SampleMode mode,
                            LogProbMode log_prob_mode) {
  const auto tempered = log_softmax(logits, temperature);
  SampleResult r;
  if (mode == SampleMode::Greedy) {
    r.index = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  } else {
    const double u = rng.uniform();
    double acc = 0.0;
    r.index = tempered.size() - 1;
    for (std::size_t i = 0; i < tempered.size(); ++i) {
      acc += std::exp(tempered[i]);
      if (u < acc) {
        r.index = i;
        break;
      }
    }
  }
  if (log_prob_mode == LogProbMode::Tempered) {
    r.log_prob = tempered[r.index];
  } else {
    r.log_prob = temperature == 1.0 ? tempered[r.index] : log_softmax(logits, 1.0)[r.index];
  }
  return r;
}

AdamState::AdamState(const ParameterSet& params) {
  for (const auto& p : params) {
    m.emplace_back(p.value.size(), 0.0);
    v.emplace_back(p.value.size(), 0.0);
  }
}

void adam_update(ParameterSet& params, const GradientSet& grads, AdamState& state, double lr) {
  if (grads.grads.size() != params.size() || state.m.size() != params.size()) {
    throw ShapeError("Adam state does not match the parameter set");
  }
  for (const auto& g : grads.grads) {
    for (double x : g) {
      if (!std::isfinite(x)) throw NumericError("non-finite gradient passed to Adam");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (ParamId id = 0; id < params.size(); ++id) {
    auto& w = params[id].value.values;
    const auto& g = grads[id];
    auto& m = state.m[id];
    auto& v = state.v[id];
    if (g.size() != w.size()) throw ShapeError("gradient shape mismatch for " + params[id].name);
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + state.epsilon);
    }
  }
}

double global_norm(const GradientSet& grads) {
  double s = 0.0;
  for (const auto& g : grads.grads) {
    for (double x : g) s += x * x;
  }
  return std::sqrt(s);
}

double clip_global_norm(GradientSet& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (auto& g : grads.grads) {
      for (double& x : g) x *= f;
    }
  }
  return norm;
}

}  // namespace vransplit
