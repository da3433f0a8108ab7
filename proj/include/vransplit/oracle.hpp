#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "vransplit/vran_model.hpp"

namespace vransplit {

enum class OracleStatus { Optimal, Infeasible };
std::string to_string(OracleStatus status);

struct OracleResult {
  Assignment best_assignment;
  double best_cost = 0.0;  // J of best_assignment when Optimal
  OracleStatus status = OracleStatus::Infeasible;
  std::uint64_t nodes_explored = 0;
};

inline constexpr std::size_t kExhaustiveLimit = 12;

/// Enumerates all 4^N assignments (N <= 12) and keeps the cheapest
/// feasible one. Equal-cost optima resolve to the lexicographically
/// smallest split sequence.
OracleResult solve_exhaustive(std::span<const BsProfile> profiles, const SystemParams& params,
                              const Topology& topology);

struct BnbOptions {
  std::size_t max_dus = 200;
};

/// Depth-first branch-and-bound. DUs are branched in descending lambda
/// order, options in ascending cost among those passing the per-DU
/// capacity and delay checks. The bound adds, for every undecided DU, its
/// cheapest individually feasible option.
OracleResult solve_bnb(std::span<const BsProfile> profiles, const SystemParams& params, const Topology& topology,
                       const BnbOptions& options = {});

OracleResult solve_exhaustive(const Scenario& scenario);
OracleResult solve_bnb(const Scenario& scenario, const BnbOptions& options = {});

/// Structured-text dump of a result.
std::string oracle_result_to_json(const OracleResult& result);
/// instance_id,cost,status,nodes_explored,wall_seconds
void write_oracle_csv_line(std::ostream& out, const std::string& instance_id, const OracleResult& result,
                           double wall_seconds);

}  // namespace vransplit
