#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vransplit/topology.hpp"

namespace vransplit {

/// Functional split options, from fully distributed (S0) to fully
/// centralized (S3).
enum class Split : std::uint8_t { S0 = 0, S1 = 1, S2 = 2, S3 = 3 };
inline constexpr std::size_t kSplitCount = 4;

constexpr std::size_t index_of(Split s) noexcept { return static_cast<std::size_t>(s); }
constexpr Split split_from_index(std::size_t i) noexcept { return static_cast<Split>(i); }
std::string to_string(Split s);

struct SplitOption {
  Split id = Split::S0;
  double delay_bound_ms = 0.0;
  double rho_du = 0.0;  // reference cores per Mbps at the DU
  double rho_cu = 0.0;  // reference cores per Mbps at the CU
};

using SplitTable = std::array<SplitOption, kSplitCount>;

/// Delay bounds (30, 30, 2, 0.25) ms and the reference-core loads per Mbps.
SplitTable default_split_table();

/// Data rate carried from DU to CU under a split.
double flow_of(Split split, double lambda_mbps);

struct BsProfile {
  int du_id = 0;
  double lambda_mbps = 0.0;
  double vm_cost_du = 1.0;       // alpha_n
  double compute_cost_du = 1.0;  // beta_n
  double du_capacity_rc = 7.5;   // H_n
  std::size_t route = 0;         // index into Topology::paths
};

enum class Constraint : std::size_t { CuCapacity = 0, DuCapacity = 1, LinkCapacity = 2, Delay = 3 };
inline constexpr std::size_t kConstraintCount = 4;
std::string to_string(Constraint c);

/// One dimensionless multiplier per constraint family.
using PenaltyWeights = std::array<double, kConstraintCount>;

struct SystemParams {
  double cu_capacity_rc = 75.0;  // H_0
  double vm_cost_cu = 0.5;       // alpha_0
  double compute_cost_cu = 0.017;  // beta_0
  /// Multiplies every path routing cost; used by cost-scale sweeps.
  double routing_cost_scale = 1.0;
  PenaltyWeights mu{0.0, 0.0, 0.0, 0.0};
  SplitTable splits = default_split_table();
};

using Assignment = std::vector<Split>;

/// C-RAN style benchmarking reports J only; the penalty is not charged.
enum class EvalMode { Penalized, Reference };

struct CostReport {
  std::vector<double> du_cost;       // V_n
  std::vector<double> cu_share;      // alpha_0 + lambda_n beta_0 rho^c per DU
  std::vector<double> routing_cost;  // U_n0
  double cu_cost = 0.0;              // V_0
  double total = 0.0;                // J
  /// Overshoot normalized by its bound; this is the C that mu weights.
  std::array<double, kConstraintCount> violation{};
  /// Same overshoot in native units (RC, RC, Mbps, microseconds).
  std::array<double, kConstraintCount> raw_violation{};
  double penalty = 0.0;    // xi
  double penalized = 0.0;  // L
  bool penalty_charged = true;

  bool feasible() const;
};

/// Relative slack granted before a load counts as exceeding its bound.
inline constexpr double kFeasibilityTolerance = 1e-9;

/// Overshoot of `load` over `bound`, zero within the feasibility tolerance.
double overshoot(double load, double bound);

double du_cost(const BsProfile& profile, Split split, const SplitTable& splits = default_split_table());
double cu_share(const BsProfile& profile, Split split, const SystemParams& params);
double cu_cost(std::span<const Split> assignment, std::span<const BsProfile> profiles, const SystemParams& params);
double routing_cost(const BsProfile& profile, const RoutePath& route, Split split, double scale = 1.0);

/// Everything per-DU cost-wise under a split: V_n + U_n0 + CU share.
double option_cost(const BsProfile& profile, const RoutePath& route, Split split, const SystemParams& params);

/// Evaluates J, the violation vector, xi and L for an assignment.
CostReport evaluate(std::span<const Split> assignment, std::span<const BsProfile> profiles,
                    const SystemParams& params, const Topology& topology,
                    EvalMode mode = EvalMode::Penalized);

Assignment dran_assignment(std::size_t n);
Assignment cran_assignment(std::size_t n);

/// A full problem instance: topology, per-DU profiles, system parameters.
struct Scenario {
  std::shared_ptr<const Topology> topology;
  std::vector<BsProfile> profiles;
  SystemParams params;

  std::size_t size() const { return profiles.size(); }
  const RoutePath& route(std::size_t i) const { return topology->paths.at(profiles.at(i).route); }
};

CostReport evaluate(std::span<const Split> assignment, const Scenario& scenario,
                    EvalMode mode = EvalMode::Penalized);

struct ProfileDefaults {
  double lambda_mbps = 150.0;
  double vm_cost_du = 1.0;
  double compute_cost_du = 1.0;
  double du_capacity_rc = 7.5;
};

/// One profile per DU of the topology, in DU id order.
std::vector<BsProfile> make_profiles(const Topology& topology, const ProfileDefaults& defaults = {});

/// mu_f = J(D-RAN) for every family: a 100% overshoot of one constraint
/// then costs as much as the whole distributed deployment.
PenaltyWeights default_penalty_weights(std::span<const BsProfile> profiles, const SystemParams& params,
                                       const Topology& topology);

/// Same instance with every lambda set to `lambda_mbps` and routing costs
/// scaled; mu is recomputed with default_penalty_weights when requested.
Scenario rescale_scenario(const Scenario& base, double lambda_mbps, double routing_cost_scale,
                          bool recompute_penalty);

/// Writes one row per DU plus a totals row.
void write_cost_report_csv(std::ostream& out, const CostReport& report, std::span<const Split> assignment,
                           const Scenario& scenario);

Assignment assignment_from_string(const std::string& text);
std::string assignment_to_string(std::span<const Split> assignment);

}  // namespace vransplit
