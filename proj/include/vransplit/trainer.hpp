#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vransplit/nn.hpp"
#include "vransplit/policy.hpp"
#include "vransplit/topology.hpp"
#include "vransplit/vran_model.hpp"

namespace vransplit {

class Rng;

struct TrainConfig {
  std::size_t epochs = 15000;
  std::size_t batch_size = 128;
  double agent_lr = 1e-4;
  double critic_lr = 5e-3;
  double temperature = 1.0;
  double clip_norm = 2.0;
  /// Redraw a common lambda and a routing-cost scale for every batch
  /// element; otherwise the instances are used as given.
  bool randomize = true;
  Interval lambda_mbps{10.0, 150.0};
  Interval routing_cost_scale{0.1, 1.0};
  /// Fixed multipliers; when unset each (scaled) instance uses
  /// default_penalty_weights.
  std::optional<PenaltyWeights> mu;
  std::uint64_t seed = 1;
  /// Write a checkpoint every this many epochs (0 disables).
  std::size_t checkpoint_every = 0;
  /// Where periodic and diagnostic checkpoints go (empty disables both).
  std::filesystem::path checkpoint_dir;
  PolicyConfig network;
};

void validate_train_config(const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_J = 0.0;
  double mean_xi = 0.0;
  double mean_L = 0.0;
  double critic_loss = 0.0;
  double grad_norm = 0.0;  // policy gradient norm before clipping
};

/// A training instance and the fixed feature normalizers derived from it.
struct TrainingInstance {
  Scenario scenario;
  FeatureScales scales;
};

TrainingInstance make_training_instance(Scenario scenario);

/// B independent uniform permutations of 0..n-1.
std::vector<std::vector<std::size_t>> sample_batch(std::size_t n, std::size_t batch_size, Rng& rng);

struct BatchElement {
  std::size_t instance = 0;
  std::vector<std::size_t> order;
  Scenario scenario;
  std::vector<Features> features;  // in `order`
};

/// Draws the instance, its scaling and the BS order of one batch element.
BatchElement draw_element(std::span<const TrainingInstance> instances, const TrainConfig& config, Rng& rng);

/// Seed of the stream that drives batch element `index` of `epoch`.
std::uint64_t element_seed(std::uint64_t seed, std::size_t epoch, std::size_t index);

/// Adds advantage * grad log pi(splits | features) to `grads`.
double accumulate_policy_gradient(const Policy& policy, std::span<const Features> features,
                                  std::span<const Split> splits, double advantage, GradientSet& grads);

class Trainer {
 public:
  Trainer(std::vector<TrainingInstance> instances, TrainConfig config);

  /// Fresh weights drawn from the configured seed.
  void initialize();

  /// One REINFORCE step over a batch; advances epoch().
  EpochRecord train_epoch();

  /// Runs until `config().epochs` epochs have completed, calling
  /// `on_epoch` after each one.
  void train(const std::function<void(const EpochRecord&)>& on_epoch = {});

  std::size_t epoch() const { return epoch_; }
  const TrainConfig& config() const { return config_; }
  const Policy& policy() const { return policy_; }
  Policy& policy() { return policy_; }
  const Critic& critic() const { return critic_; }
  Critic& critic() { return critic_; }
  std::span<const TrainingInstance> instances() const { return instances_; }

  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);

 private:
  std::vector<TrainingInstance> instances_;
  TrainConfig config_;
  Policy policy_;
  Critic critic_;
  AdamState policy_adam_;
  AdamState critic_adam_;
  GradientSet policy_grads_;
  GradientSet critic_grads_;
  std::size_t epoch_ = 0;
};

/// epoch,mean_J,mean_xi,mean_L,critic_loss,grad_norm
void write_curve_header(std::ostream& out);
void write_curve_row(std::ostream& out, const EpochRecord& record);

/// checkpoint_<epoch>.json
std::filesystem::path checkpoint_name(std::size_t epoch);

/// Rebuilds the policy stored in a trainer checkpoint.
Policy load_policy_checkpoint(const std::filesystem::path& path);

}  // namespace vransplit
