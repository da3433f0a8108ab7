#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vransplit {

class Rng;

/// Dense row-major tensor of doubles. Rank 1 and 2 are all the networks
/// here need.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t shape_product(std::span<const std::size_t> shape);

using ParamId = std::size_t;

struct Parameter {
  std::string name;
  Tensor value;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Named, ordered collection of learnable tensors.
class ParameterSet {
 public:
  ParamId add(const std::string& name, std::vector<std::size_t> shape);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](ParamId id) { return params_[id]; }
  const Parameter& operator[](ParamId id) const { return params_[id]; }
  ParamId id_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t scalar_count() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Uniform(-1/sqrt(cols), 1/sqrt(cols)) for every rank-2 tensor, zero
  /// for vectors.
  void init_uniform_fan_in(Rng& rng);
  void fill(double value);

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) { return a.params_ == b.params_; }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, ParamId> index_;
};

/// Gradient accumulators shaped like a ParameterSet.
struct GradientSet {
  std::vector<std::vector<double>> grads;

  GradientSet() = default;
  explicit GradientSet(const ParameterSet& params);

  void zero();
  std::vector<double>& operator[](ParamId id) { return grads[id]; }
  const std::vector<double>& operator[](ParamId id) const { return grads[id]; }
  /// this += other, parameter by parameter.
  void accumulate(const GradientSet& other);
};

}  // namespace vransplit
