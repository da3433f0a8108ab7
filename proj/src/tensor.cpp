#include "vransplit/tensor.hpp"

#include <cmath>
#include <numeric>

#include "vransplit/error.hpp"
#include "vransplit/rng.hpp"

namespace vransplit {

std::size_t shape_product(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)), values(shape_product(shape), 0.0) {}

ParamId ParameterSet::add(const std::string& name, std::vector<std::size_t> shape) {
  if (index_.count(name) != 0) throw ShapeError("duplicate parameter name '" + name + "'");
  const ParamId id = params_.size();
  params_.push_back({name, Tensor(std::move(shape))});
  index_[name] = id;
  return id;
}

ParamId ParameterSet::id_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::init_uniform_fan_in(Rng& rng) {
  for (auto& p : params_) {
    if (p.value.shape.size() < 2) {
      std::fill(p.value.values.begin(), p.value.values.end(), 0.0);
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.cols()));
    for (auto& v : p.value.values) v = rng.uniform(-bound, bound);
  }
}

void ParameterSet::fill(double value) {
  for (auto& p : params_) std::fill(p.value.values.begin(), p.value.values.end(), value);
}

GradientSet::GradientSet(const ParameterSet& params) {
  grads.reserve(params.size());
  for (const auto& p : params) grads.emplace_back(p.value.size(), 0.0);
}

void GradientSet::zero() {
  for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
}

void GradientSet::accumulate(const GradientSet& other) {
  if (other.grads.size() != grads.size()) throw ShapeError("gradient sets differ in parameter count");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (other.grads[i].size() != grads[i].size()) throw ShapeError("gradient sets differ in shape");
    for (std::size_t k = 0; k < grads[i].size(); ++k) grads[i][k] += other.grads[i][k];
  }
}

}  // namespace vransplit
