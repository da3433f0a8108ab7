#include "vransplit/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "vransplit/nn.hpp"
#include "vransplit/policy.hpp"
#include "vransplit/rng.hpp"

namespace vransplit {

namespace {

void randomize(ParameterSet& params, Rng& rng, double bound) {
  for (ParamId id = 0; id < params.size(); ++id) {
    for (double& v : params[id].value.values) v = rng.uniform(-bound, bound);
  }
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double bound = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return v;
}

std::vector<Features> random_features(Rng& rng, std::size_t n) {
  std::vector<Features> out(n);
  for (auto& f : out) {
    for (double& x : f) x = rng.uniform();
  }
  return out;
}

double eval_loss(const ParameterSet& params, const LossBuilder& loss) {
  Tape tape(params);
  return tape.scalar(loss(tape));
}

GradcheckResult check_lstm(const GradcheckOptions& o, Rng& rng) {
  ParameterSet ps;
  const auto cell = add_lstm(ps, "lstm", 5, 6);
  randomize(ps, rng, 0.6);
  const auto xs = std::array{random_vector(rng, 5), random_vector(rng, 5), random_vector(rng, 5)};
  const auto proj = random_vector(rng, 12);
  auto loss = [&](Tape& t) {
    LstmState s = lstm_zero_state(t, 6);
    for (const auto& x : xs) s = lstm_step(t, cell, t.constant(x), s);
    const std::array<Var, 2> hc{s.h, s.c};
    return t.dot(t.concat(hc), t.constant(proj));
  };
  return gradcheck("lstm", ps, loss, o.coordinates_per_case, rng, o);
}

GradcheckResult check_attention(const GradcheckOptions& o, Rng& rng) {
  ParameterSet ps;
  const auto attn = add_attention(ps, "attn", 6);
  randomize(ps, rng, 0.6);
  const auto query = random_vector(rng, 6);
  const auto states = random_vector(rng, 5 * 6);
  const auto proj = random_vector(rng, 6);
  const auto proj_align = random_vector(rng, 5);
  auto loss = [&](Tape& t) {
    const Var h = t.constant(states, 5, 6);
    const Var keys = attention_keys(t, attn, h);
    const auto out = attention_context(t, attn, t.constant(query), keys, h);
    return t.add(t.dot(out.context, t.constant(proj)), t.dot(out.alignment, t.constant(proj_align)));
  };
  return gradcheck("attention", ps, loss, o.coordinates_per_case, rng, o);
}

GradcheckResult check_mlp(const GradcheckOptions& o, Rng& rng) {
  ParameterSet ps;
  const std::array<std::size_t, 4> sizes{5, 7, 6, 3};
  const auto mlp = add_mlp(ps, "mlp", sizes);
  randomize(ps, rng, 0.6);
  const auto x = random_vector(rng, 5);
  const auto proj = random_vector(rng, 3);
  auto loss = [&](Tape& t) { return t.dot(mlp_forward(t, mlp, t.constant(x)), t.constant(proj)); };
  return gradcheck("mlp", ps, loss, o.coordinates_per_case, rng, o);
}

GradcheckResult check_embedding(const GradcheckOptions& o, Rng& rng) {
  ParameterSet ps;
  const ParamId table = ps.add("embed.table", {5, 6});
  const ParamId w = ps.add("embed.w", {6, 4});
  const ParamId b = ps.add("embed.b", {6});
  randomize(ps, rng, 0.8);
  const auto xs = std::array{random_vector(rng, 4), random_vector(rng, 4), random_vector(rng, 4)};
  const std::array<std::size_t, 3> rows{4, 0, 2};
  const auto proj = random_vector(rng, 6);
  auto loss = [&](Tape& t) {
    std::vector<Var> terms;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const Var e = t.add(t.row(t.param(table), rows[k]), t.affine(t.param(w), t.constant(xs[k]), t.param(b)));
      terms.push_back(t.dot(t.tanh(e), t.constant(proj)));
    }
    return t.add_n(terms);
  };
  return gradcheck("embedding", ps, loss, o.coordinates_per_case, rng, o);
}

GradcheckResult check_policy(const GradcheckOptions& o, Rng& rng) {
  Policy policy;
  randomize(policy.params(), rng, 0.3);
  const auto features = random_features(rng, 5);
  Assignment forced(features.size());
  for (auto& s : forced) s = split_from_index(rng.index(kSplitCount));
  auto loss = [&](Tape& t) {
    DecodeOptions opts;
    opts.forced = forced;
    Rng unused(0);
    const auto enc = policy.encode(t, features);
    return policy.decode(t, enc, opts, unused).log_prob_var;
  };
  return gradcheck("policy", policy.params(), loss, o.coordinates_per_case, rng, o);
}

GradcheckResult check_critic(const GradcheckOptions& o, Rng& rng) {
  Critic critic(PolicyConfig{}, 3.0);
  randomize(critic.params(), rng, 0.3);
  const auto features = random_features(rng, 5);
  auto loss = [&](Tape& t) { return critic.value(t, features); };
  return gradcheck("critic", critic.params(), loss, o.coordinates_per_case, rng, o);
}

}  // namespace

double gradcheck_relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckResult gradcheck(const std::string& name, ParameterSet& params, const LossBuilder& loss,
                          std::size_t coordinates, Rng& rng, const GradcheckOptions& options) {
  GradientSet grads(params);
  {
    Tape tape(params, &grads);
    tape.backward(loss(tape));
  }

  std::vector<std::pair<ParamId, std::size_t>> all;
  for (ParamId id = 0; id < params.size(); ++id) {
    for (std::size_t k = 0; k < params[id].value.size(); ++k) all.emplace_back(id, k);
  }
  rng.shuffle(std::span(all));
  all.resize(std::min(coordinates, all.size()));

  GradcheckResult r;
  r.name = name;
  for (const auto& [id, k] : all) {
    double& w = params[id].value.values[k];
    const double saved = w;
    w = saved + options.step;
    const double up = eval_loss(params, loss);
    w = saved - options.step;
    const double down = eval_loss(params, loss);
    w = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double err = gradcheck_relative_error(grads[id][k], numeric, options.denominator_floor);
    ++r.coordinates;
    if (err >= options.tolerance) ++r.failures;
    if (err > r.max_rel_error || r.worst_coordinate.empty()) {
      r.max_rel_error = std::max(r.max_rel_error, err);
      r.worst_coordinate = params[id].name + "[" + std::to_string(k) + "]";
    }
  }
  return r;
}

std::vector<GradcheckResult> run_gradcheck_suite(const GradcheckOptions& options) {
  Rng rng(options.seed);
  std::vector<GradcheckResult> out;
  out.push_back(check_lstm(options, rng));
  out.push_back(check_attention(options, rng));
  out.push_back(check_mlp(options, rng));
  out.push_back(check_embedding(options, rng));
  out.push_back(check_policy(options, rng));
  out.push_back(check_critic(options, rng));
  return out;
}

}  // namespace vransplit
