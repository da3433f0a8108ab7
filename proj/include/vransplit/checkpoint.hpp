#pragma once

#include <json.hpp>

#include "vransplit/nn.hpp"
#include "vransplit/tensor.hpp"

namespace vransplit {

inline constexpr int kCheckpointVersion = 1;

/// {"name": {"shape": [...], "values": [...]}, ...} in parameter order.
nlohmann::json parameters_to_json(const ParameterSet& params);
/// Loads values into an already-shaped set. Every parameter must be
/// present with the same shape; unknown names are rejected.
void parameters_from_json(const nlohmann::json& j, ParameterSet& params);

nlohmann::json adam_to_json(const AdamState& state, const ParameterSet& params);
AdamState adam_from_json(const nlohmann::json& j, const ParameterSet& params);

}  // namespace vransplit
