#include "vransplit/trainer.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "vransplit/checkpoint.hpp"
#include "vransplit/error.hpp"
#include "vransplit/format.hpp"
#include "vransplit/rng.hpp"

namespace vransplit {

namespace {

constexpr std::uint64_t kPolicyInitStream = 0x706f6c696379ULL;
constexpr std::uint64_t kCriticInitStream = 0x637269746963ULL;
constexpr std::uint64_t kEpochStream = 0x65706f6368ULL;
constexpr const char* kCheckpointFormat = "vransplit.checkpoint";

double critic_scale_for(std::span<const TrainingInstance> instances) {
  double total = 0.0;
  for (const auto& inst : instances) {
    const auto& s = inst.scenario;
    total += evaluate(dran_assignment(s.size()), s).total;
  }
  return instances.empty() ? 1.0 : total / static_cast<double>(instances.size());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

PolicyConfig network_from_json(const nlohmann::json& j) {
  if (!j.contains("network")) throw ParseError("checkpoint: missing field 'network'");
  PolicyConfig c;
  c.hidden = j["network"].at("hidden").get<std::size_t>();
  c.embedding = j["network"].at("embedding").get<std::size_t>();
  return c;
}

void check_format(const nlohmann::json& j, const std::filesystem::path& path) {
  if (j.value("format", std::string{}) != kCheckpointFormat) {
    throw ParseError(path.string() + ": not a checkpoint file");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ParseError(path.string() + ": unsupported checkpoint version");
  }
}

}  // namespace

void validate_train_config(const TrainConfig& c) {
  if (c.epochs == 0) throw ConfigError("train.epochs must be positive");
  if (c.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(c.agent_lr > 0.0) || !(c.critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(c.temperature > 0.0)) throw ConfigError("train.temperature must be positive");
  if (!(c.clip_norm > 0.0)) throw ConfigError("train.clip_norm must be positive");
  if (c.lambda_mbps.lo < 0.0 || c.lambda_mbps.hi < c.lambda_mbps.lo) throw ConfigError("bad train.lambda_mbps range");
  if (c.routing_cost_scale.lo < 0.0 || c.routing_cost_scale.hi < c.routing_cost_scale.lo) {
    throw ConfigError("bad train.routing_cost_scale range");
  }
  if (c.mu) {
    for (double m : *c.mu) {
      if (!(m >= 0.0)) throw ConfigError("penalty weights must be nonnegative");
    }
  }
  if (c.network.hidden == 0 || c.network.embedding == 0) throw ConfigError("network sizes must be positive");
}

TrainingInstance make_training_instance(Scenario scenario) {
  if (scenario.size() == 0) throw InputError("training instance without DUs");
  TrainingInstance t{std::move(scenario), {}};
  t.scales = feature_scales(t.scenario);
  return t;
}

std::vector<std::vector<std::size_t>> sample_batch(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) out.push_back(rng.permutation(n));
  return out;
}

std::uint64_t element_seed(std::uint64_t seed, std::size_t epoch, std::size_t index) {
  return mix_seed(mix_seed(mix_seed(seed, kEpochStream), epoch), index);
}

BatchElement draw_element(std::span<const TrainingInstance> instances, const TrainConfig& config, Rng& rng) {
  if (instances.empty()) throw InputError("no training instances");
  BatchElement e;
  e.instance = instances.size() > 1 ? rng.index(instances.size()) : 0;
  const auto& inst = instances[e.instance];
  if (config.randomize) {
    const double lambda = rng.uniform(config.lambda_mbps.lo, config.lambda_mbps.hi);
    const double scale = rng.uniform(config.routing_cost_scale.lo, config.routing_cost_scale.hi);
    e.scenario = rescale_scenario(inst.scenario, lambda, scale, !config.mu.has_value());
  } else {
    e.scenario = inst.scenario;
    if (!config.mu) e.scenario.params.mu = default_penalty_weights(e.scenario.profiles, e.scenario.params,
                                                                   *e.scenario.topology);
  }
  if (config.mu) e.scenario.params.mu = *config.mu;
  e.order = rng.permutation(e.scenario.size());
  e.features = featurize(e.scenario, inst.scales, e.order);
  return e;
}

double accumulate_policy_gradient(const Policy& policy, std::span<const Features> features,
                                  std::span<const Split> splits, double advantage, GradientSet& grads) {
  Tape tape(policy.params(), &grads);
  Rng unused(0);
  DecodeOptions opts;
  opts.forced = splits;
  const auto enc = policy.encode(tape, features);
  const auto r = policy.decode(tape, enc, opts, unused);
  tape.backward(r.log_prob_var, advantage);
  return r.log_prob;
}

Trainer::Trainer(std::vector<TrainingInstance> instances, TrainConfig config)
    : instances_(std::move(instances)),
      config_(std::move(config)),
      policy_(config_.network),
      critic_(config_.network, critic_scale_for(instances_)),
      policy_adam_(policy_.params()),
      critic_adam_(critic_.params()),
      policy_grads_(policy_.params()),
      critic_grads_(critic_.params()) {
  validate_train_config(config_);
  if (instances_.empty()) throw InputError("no training instances");
}

void Trainer::initialize() {
  Rng prng(mix_seed(config_.seed, kPolicyInitStream));
  policy_.initialize(prng);
  Rng crng(mix_seed(config_.seed, kCriticInitStream));
  critic_.initialize(crng);
  policy_adam_ = AdamState(policy_.params());
  critic_adam_ = AdamState(critic_.params());
  epoch_ = 0;
}

EpochRecord Trainer::train_epoch() {
  const std::size_t batch = config_.batch_size;
  const double inv_b = 1.0 / static_cast<double>(batch);
  policy_grads_.zero();
  critic_grads_.zero();
  Tape ptape(policy_.params(), &policy_grads_);
  Tape ctape(critic_.params(), &critic_grads_);

  EpochRecord rec;
  rec.epoch = epoch_ + 1;
  DecodeOptions opts;
  opts.temperature = config_.temperature;
  for (std::size_t b = 0; b < batch; ++b) {
    Rng rng(element_seed(config_.seed, epoch_, b));
    const auto e = draw_element(instances_, config_, rng);

    ctape.rewind(0);
    const Var baseline_var = critic_.value(ctape, e.features);
    const double baseline = ctape.scalar(baseline_var);

    ptape.rewind(0);
    const auto enc = policy_.encode(ptape, e.features);
    const auto roll = policy_.decode(ptape, enc, opts, rng);
    const auto report = evaluate(unpermute(roll.splits, e.order), e.scenario);
    const double cost = report.penalized;

    ptape.backward(roll.log_prob_var, (cost - baseline) * inv_b);
    ctape.backward(baseline_var, 2.0 * (baseline - cost) * inv_b);

    rec.mean_J += report.total;
    rec.mean_xi += report.penalty;
    rec.mean_L += cost;
    rec.critic_loss += (baseline - cost) * (baseline - cost);
  }
  rec.mean_J *= inv_b;
  rec.mean_xi *= inv_b;
  rec.mean_L *= inv_b;
  rec.critic_loss *= inv_b;
  if (!std::isfinite(rec.mean_L) || !std::isfinite(rec.critic_loss)) throw NumericError("non-finite epoch loss");

  rec.grad_norm = clip_global_norm(policy_grads_, config_.clip_norm);
  clip_global_norm(critic_grads_, config_.clip_norm);
  adam_update(policy_.params(), policy_grads_, policy_adam_, config_.agent_lr);
  adam_update(critic_.params(), critic_grads_, critic_adam_, config_.critic_lr);
  ++epoch_;
  return rec;
}

void Trainer::train(const std::function<void(const EpochRecord&)>& on_epoch) {
  const bool checkpoints = !config_.checkpoint_dir.empty();
  while (epoch_ < config_.epochs) {
    EpochRecord rec;
    try {
      rec = train_epoch();
    } catch (const NumericError&) {
      if (checkpoints) save_checkpoint(config_.checkpoint_dir / ("diagnostic_" + std::to_string(epoch_) + ".json"));
      throw;
    }
    if (on_epoch) on_epoch(rec);
    if (checkpoints && config_.checkpoint_every > 0 &&
        (epoch_ % config_.checkpoint_every == 0 || epoch_ == config_.epochs)) {
      save_checkpoint(config_.checkpoint_dir / checkpoint_name(epoch_));
    }
  }
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["epoch"] = epoch_;
  j["seed"] = config_.seed;
  j["network"] = {{"hidden", config_.network.hidden}, {"embedding", config_.network.embedding}};
  j["critic_output_scale"] = critic_.output_scale();
  j["policy"] = parameters_to_json(policy_.params());
  j["critic"] = parameters_to_json(critic_.params());
  j["policy_adam"] = adam_to_json(policy_adam_, policy_.params());
  j["critic_adam"] = adam_to_json(critic_adam_, critic_.params());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void Trainer::load_checkpoint(const std::filesystem::path& path) {
  const auto j = read_json(path);
  check_format(j, path);
  const auto net = network_from_json(j);
  if (net.hidden != config_.network.hidden || net.embedding != config_.network.embedding) {
    throw ConfigError(path.string() + ": network sizes differ from the configuration");
  }
  try {
    parameters_from_json(j.at("policy"), policy_.params());
    parameters_from_json(j.at("critic"), critic_.params());
    policy_adam_ = adam_from_json(j.at("policy_adam"), policy_.params());
    critic_adam_ = adam_from_json(j.at("critic_adam"), critic_.params());
    critic_.set_output_scale(j.at("critic_output_scale").get<double>());
    epoch_ = j.at("epoch").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_curve_header(std::ostream& out) { out << "epoch,mean_J,mean_xi,mean_L,critic_loss,grad_norm\n"; }

void write_curve_row(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << format_double(r.mean_J) << ',' << format_double(r.mean_xi) << ','
      << format_double(r.mean_L) << ',' << format_double(r.critic_loss) << ',' << format_double(r.grad_norm) << '\n';
}

std::filesystem::path checkpoint_name(std::size_t epoch) { return "checkpoint_" + std::to_string(epoch) + ".json"; }

Policy load_policy_checkpoint(const std::filesystem::path& path) {
  const auto j = read_json(path);
  check_format(j, path);
  Policy policy(network_from_json(j));
  try {
    parameters_from_json(j.at("policy"), policy.params());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return policy;
}

}  // namespace vransplit
