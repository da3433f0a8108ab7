#include "vransplit/checkpoint.hpp"

#include <string>

#include "vransplit/error.hpp"

namespace vransplit {

namespace {

const nlohmann::json& field(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return j.at(key);
}

std::vector<double> numbers(const nlohmann::json& j, std::size_t expected, const std::string& where) {
  if (!j.is_array() || j.size() != expected) {
    throw ParseError(where + ": expected " + std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& x : j) {
    if (!x.is_number()) throw ParseError(where + ": non-numeric entry");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

nlohmann::json parameters_to_json(const ParameterSet& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& p : params) {
    j[p.name] = {{"shape", p.value.shape}, {"values", p.value.values}};
  }
  return j;
}

void parameters_from_json(const nlohmann::json& j, ParameterSet& params) {
  if (!j.is_object()) throw ParseError("parameters: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!params.contains(it.key())) throw ParseError("parameters: unknown tensor '" + it.key() + "'");
  }
  for (ParamId id = 0; id < params.size(); ++id) {
    auto& p = params[id];
    const std::string where = "parameters." + p.name;
    const auto& entry = field(j, p.name, "parameters");
    const auto shape = field(entry, "shape", where).get<std::vector<std::size_t>>();
    if (shape != p.value.shape) throw ShapeError(where + ": shape differs from the model");
    p.value.values = numbers(field(entry, "values", where), p.value.size(), where + ".values");
  }
}

nlohmann::json adam_to_json(const AdamState& state, const ParameterSet& params) {
  nlohmann::json moments = nlohmann::json::object();
  for (ParamId id = 0; id < params.size(); ++id) {
    moments[params[id].name] = {{"m", state.m.at(id)}, {"v", state.v.at(id)}};
  }
  return {{"step", state.step},   {"beta1", state.beta1}, {"beta2", state.beta2},
          {"epsilon", state.epsilon}, {"moments", moments}};
}

AdamState adam_from_json(const nlohmann::json& j, const ParameterSet& params) {
  AdamState s(params);
  s.step = field(j, "step", "adam").get<std::uint64_t>();
  s.beta1 = field(j, "beta1", "adam").get<double>();
  s.beta2 = field(j, "beta2", "adam").get<double>();
  s.epsilon = field(j, "epsilon", "adam").get<double>();
  const auto& moments = field(j, "moments", "adam");
  for (ParamId id = 0; id < params.size(); ++id) {
    const std::string where = "adam.moments." + params[id].name;
    const auto& entry = field(moments, params[id].name, "adam.moments");
    s.m[id] = numbers(field(entry, "m", where), params[id].value.size(), where + ".m");
    s.v[id] = numbers(field(entry, "v", where), params[id].value.size(), where + ".v");
  }
  return s;
}

}  // namespace vransplit
