#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vransplit/tensor.hpp"

namespace vransplit {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over a recorded sequence of
/// tensor operations.
///
/// Values live in one arena per tape. Parameter leaves read the bound
/// ParameterSet directly and their gradients accumulate straight into the
/// bound GradientSet, so one tape per rollout can be backpropagated without
/// copying weights. Every operation checks its output for NaN/Inf and
/// throws NumericError naming the operation.
///
/// Vectors are n x 1; a rank-1 parameter of length n is also n x 1.
class Tape {
 public:
  explicit Tape(const ParameterSet& params, GradientSet* grads = nullptr);

  Var param(ParamId id);
  Var constant(std::span<const double> values);
  Var constant(std::span<const double> values, std::size_t rows, std::size_t cols);

  /// W x for W of shape m x n.
  Var matvec(Var w, Var x);
  /// W x + b.
  Var affine(Var w, Var x, Var b);
  /// Row-wise A W^T: (N x k) times (m x k)^T -> N x m.
  Var matmul_nt(Var a, Var w);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  /// Element-wise sum of equally shaped values.
  Var add_n(std::span<const Var> terms);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var concat(std::span<const Var> parts);
  Var slice(Var a, std::size_t offset, std::size_t length);
  /// Stacks equally sized vectors as the rows of a matrix.
  Var stack_rows(std::span<const Var> rows);
  /// Row i of a matrix, as a vector (embedding lookup).
  Var row(Var matrix, std::size_t i);
  /// score_k = v . tanh(q + K_k) for every row K_k of keys.
  Var additive_scores(Var query, Var keys, Var v);
  Var softmax(Var a);
  Var log_softmax(Var a);
  /// sum_k weights_k * rows_k.
  Var weighted_rows(Var weights, Var rows);
  Var pick(Var a, std::size_t i);
  Var sum(Var a);
  Var dot(Var a, Var b);

  std::span<const double> value(Var v) const;
  double scalar(Var v) const;
  std::size_t rows(Var v) const;
  std::size_t cols(Var v) const;
  std::size_t size(Var v) const { return rows(v) * cols(v); }

  /// Propagates d(root)/d(.) scaled by `seed` into every parameter
  /// gradient. The root must be a scalar.
  void backward(Var root, double seed = 1.0);

  std::size_t mark() const { return nodes_.size(); }
  /// Drops every node recorded after `mark`.
  void rewind(std::size_t mark);
  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    Param, Const, MatVec, Affine, MatMulNT, Add, Sub, Mul, Scale, AddN, Tanh, Sigmoid, Concat, Slice,
    StackRows, Row, AdditiveScores, Softmax, LogSoftmax, WeightedRows, Pick, Sum, Dot
  };

  struct Node {
    Op op = Op::Const;
    bool needs_grad = false;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t off = 0;      // value/grad offset in the arenas
    std::size_t aux = 0;      // auxiliary storage offset
    std::size_t args_off = 0;
    std::size_t args_n = 0;
    std::size_t index = 0;    // pick/row/slice position
    double factor = 0.0;
    int a = -1;
    int b = -1;
    int c = -1;
    ParamId param = 0;
  };

  Var push(Op op, std::size_t rows, std::size_t cols, int a = -1, int b = -1, int c = -1);
  std::size_t alloc_aux(std::size_t n);
  const Node& node(Var v) const;
  const double* val(int id) const;
  double* mval(int id);
  double* grad(int id);
  void check_finite(Var v, const char* op) const;
  void backprop_node(std::size_t i);

  const ParameterSet* params_;
  GradientSet* grads_;
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> node_grads_;
  std::vector<double> aux_;
  std::vector<int> args_;
};

}  // namespace vransplit
