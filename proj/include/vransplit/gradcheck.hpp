#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vransplit/tape.hpp"
#include "vransplit/tensor.hpp"

namespace vransplit {

class Rng;

struct GradcheckOptions {
  std::size_t coordinates_per_case = 400;
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Lower bound of the relative-error denominator, so coordinates whose
  /// true derivative is ~0 are judged on absolute error.
  double denominator_floor = 1e-3;
  std::uint64_t seed = 1;
};

struct GradcheckResult {
  std::string name;
  std::size_t coordinates = 0;
  std::size_t failures = 0;
  double max_rel_error = 0.0;
  std::string worst_coordinate;

  bool passed() const { return failures == 0 && coordinates > 0; }
};

/// Builds a scalar loss on a fresh tape bound to the parameter set.
using LossBuilder = std::function<Var(Tape&)>;

/// |a - n| / max(|a|, |n|, floor)
double gradcheck_relative_error(double analytic, double numeric, double floor);

/// Compares reverse-mode gradients with central differences on
/// `coordinates` distinct randomly chosen scalars of `params`.
GradcheckResult gradcheck(const std::string& name, ParameterSet& params, const LossBuilder& loss,
                          std::size_t coordinates, Rng& rng, const GradcheckOptions& options);

/// LSTM, attention, MLP, embedding, full policy and critic graphs.
std::vector<GradcheckResult> run_gradcheck_suite(const GradcheckOptions& options);

}  // namespace vransplit
