#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "vransplit/experiment.hpp"

namespace vransplit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNumeric = 4;

/// topology.json, capacity_ecdf.csv, path_delay_ecdf.csv, manifest.json
int cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out, std::ostream& log);

/// curve.csv, checkpoints/, manifest.json. With `resume`, training
/// continues from that checkpoint and the curve keeps its earlier rows.
int cmd_train(const ExperimentConfig& config, const std::filesystem::path& out,
              const std::optional<std::filesystem::path>& resume, std::ostream& log);

/// search.json, best_assignment.json, cost_report.csv
int cmd_infer(const ExperimentConfig& config, const std::filesystem::path& out,
              const std::filesystem::path& checkpoint, std::ostream& log);

/// oracle.json, oracle.csv, cost_report.csv
int cmd_solve_exact(const ExperimentConfig& config, const std::filesystem::path& out, std::ostream& log);

/// gap.csv, plot_data.csv, summary.json over every configured sweep.
int cmd_compare(const ExperimentConfig& config, const std::filesystem::path& out,
                const std::filesystem::path& checkpoint, std::ostream& log);

/// gradcheck.csv; nonzero exit when any coordinate fails.
int cmd_gradcheck(std::uint64_t seed, const std::filesystem::path& out, std::ostream& log);

/// Parses arguments and dispatches; maps errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vransplit
