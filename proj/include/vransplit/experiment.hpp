#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vransplit/inference.hpp"
#include "vransplit/topology.hpp"
#include "vransplit/trainer.hpp"
#include "vransplit/vran_model.hpp"

namespace vransplit {

struct TopologySpec {
  /// Load this file instead of generating.
  std::optional<std::filesystem::path> file;
  WaxmanParams waxman;
  /// Multiply link capacities and H_0 by n_dus / (n_nodes - 1), so a
  /// graph with fewer DUs is as loaded as the all-DU graph.
  bool scale_to_dus = false;
  /// Redraw the graph (derived seeds) until D-RAN is feasible.
  bool require_dran_feasible = false;
  std::size_t max_attempts = 100;
};

struct ProfileOverride {
  int du_id = 0;
  std::optional<double> lambda_mbps;
  std::optional<double> vm_cost_du;
  std::optional<double> compute_cost_du;
  std::optional<double> du_capacity_rc;
};

struct ScenarioSpec {
  ProfileDefaults profile;
  SystemParams system;
  /// Unset: default_penalty_weights of every evaluated instance.
  std::optional<PenaltyWeights> mu;
  std::vector<ProfileOverride> overrides;
};

/// A parameter sweep `name=lo:hi:step`; name is lambda_mbps or
/// routing_cost_scale.
struct Sweep {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;

  std::vector<double> points() const;
};

Sweep parse_sweep(const std::string& text);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  TopologySpec topology;
  ScenarioSpec scenario;
  TrainConfig train;
  SearchConfig search;
  std::vector<Sweep> sweeps;
};

/// Strict parse: unknown keys and ill-typed values raise ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Sets the top-level seed and every derived one.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

/// Fully resolved configuration, the run manifest.
nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& config);

struct BuiltScenario {
  Scenario scenario;
  std::size_t attempts = 1;
};

BuiltScenario build_scenario(const TopologySpec& topology, const ScenarioSpec& scenario);
inline BuiltScenario build_scenario(const ExperimentConfig& c) { return build_scenario(c.topology, c.scenario); }

/// Waxman graph of `n_nodes` with `n_dus` DUs, capacities scaled to the
/// DU count, redrawn until D-RAN is feasible at the default load.
Scenario scaled_instance(std::size_t n_dus, std::uint64_t seed, std::size_t n_nodes = 100);

/// One instance per sweep point; the other quantity stays at its base
/// value. mu follows `mu` or is recomputed per point when unset.
std::vector<SuiteInstance> sweep_instances(const Scenario& base, const Sweep& sweep,
                                           const std::optional<PenaltyWeights>& mu);

}  // namespace vransplit
