#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vransplit/oracle.hpp"
#include "vransplit/policy.hpp"
#include "vransplit/vran_model.hpp"

namespace vransplit {

struct SearchConfig {
  std::size_t sample_count = 1280;
  double temperature = 1.5;
  bool include_greedy = true;
  std::uint64_t seed = 1;
  /// When non-empty, search runs once per temperature and keeps the best
  /// candidate; `temperature` is then ignored.
  std::vector<double> temperatures{0.5, 1.0, 1.5, 2.0, 2.5};
};

void validate_search_config(const SearchConfig& config);

struct SearchResult {
  Assignment best;
  CostReport report;
  double feasible_fraction = 0.0;
  std::size_t samples_evaluated = 0;
  double temperature = 0.0;  // temperature that produced `best`; 0 for greedy
};

/// Candidate ordering: feasible before infeasible, then J for feasible
/// ones and L otherwise, then the lexicographically smaller sequence.
bool better_candidate(const CostReport& a, std::span<const Split> sa, const CostReport& b,
                      std::span<const Split> sb);

/// Samples `sample_count` rollouts at a single temperature (plus the
/// greedy one when enabled) and returns the best. Sample k always comes
/// from the same position of one seeded stream, so sample sets are
/// nested across counts.
SearchResult search_at(const Policy& policy, const Scenario& scenario, const FeatureScales& scales,
                       std::size_t sample_count, double temperature, bool include_greedy, std::uint64_t seed);

/// Full search per the configuration, including the temperature sweep.
SearchResult search(const Policy& policy, const Scenario& scenario, const FeatureScales& scales,
                    const SearchConfig& config);

struct GapRow {
  std::string instance_id;
  double J_search = 0.0;
  double J_opt = 0.0;
  double gap_percent = 0.0;
  double J_dran = 0.0;
  double J_cran_reference = 0.0;
  bool oracle_optimal = false;
  bool search_feasible = false;
  double search_temperature = 0.0;
  Assignment search_assignment;
  Assignment oracle_assignment;
};

struct SuiteInstance {
  std::string id;
  Scenario scenario;
};

std::vector<GapRow> evaluate_suite(const Policy& policy, std::span<const SuiteInstance> instances,
                                   const FeatureScales& scales, const SearchConfig& config);

struct GapSummary {
  std::size_t rows = 0;
  std::size_t counted = 0;  // rows with an optimal oracle and feasible search
  double mean_gap_percent = 0.0;
  double max_gap_percent = 0.0;
};

GapSummary summarize(std::span<const GapRow> rows);

/// instance_id,J_search,J_opt,gap_percent,J_dran,J_cran_reference,oracle_status,search_feasible,
/// search_temperature,search_assignment,oracle_assignment
void write_gap_csv(std::ostream& out, std::span<const GapRow> rows);

/// DU id -> split name.
std::string assignment_to_json(std::span<const Split> assignment, const Scenario& scenario);

}  // namespace vransplit
