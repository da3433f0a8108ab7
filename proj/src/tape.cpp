#include "vransplit/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vransplit/error.hpp"

namespace vransplit {

namespace {

double sigmoid_of(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// y = W x (+ b). Four rows at a time for instruction-level parallelism;
// each row still sums in index order, so results match the plain loop.
void gemv(const double* W, const double* X, const double* B, std::size_t m, std::size_t n, double* Y) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* r0 = W + i * n;
    const double* r1 = r0 + n;
    const double* r2 = r1 + n;
    const double* r3 = r2 + n;
    double a0 = B ? B[i] : 0.0;
    double a1 = B ? B[i + 1] : 0.0;
    double a2 = B ? B[i + 2] : 0.0;
    double a3 = B ? B[i + 3] : 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = X[j];
      a0 += r0[j] * x;
      a1 += r1[j] * x;
      a2 += r2[j] * x;
      a3 += r3[j] * x;
    }
    Y[i] = a0;
    Y[i + 1] = a1;
    Y[i + 2] = a2;
    Y[i + 3] = a3;
  }
  for (; i < m; ++i) {
    const double* row = W + i * n;
    double acc = B ? B[i] : 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * X[j];
    Y[i] = acc;
  }
}

void require(bool ok, const char* op, const char* what) {
  if (!ok) throw ShapeError(std::string(op) + ": " + what);
}

}  // namespace

Tape::Tape(const ParameterSet& params, GradientSet* grads) : params_(&params), grads_(grads) {
  if (grads_ != nullptr && grads_->grads.size() != params.size()) {
    throw ShapeError("gradient set does not match the parameter set");
  }
  nodes_.reserve(1024);
  values_.reserve(16384);
}

Var Tape::push(Op op, std::size_t rows, std::size_t cols, int a, int b, int c) {
  Node n;
  n.op = op;
  n.rows = rows;
  n.cols = cols;
  n.off = values_.size();
  n.a = a;
  n.b = b;
  n.c = c;
  n.needs_grad = (a >= 0 && nodes_[static_cast<std::size_t>(a)].needs_grad) ||
                 (b >= 0 && nodes_[static_cast<std::size_t>(b)].needs_grad) ||
                 (c >= 0 && nodes_[static_cast<std::size_t>(c)].needs_grad);
  values_.resize(values_.size() + rows * cols, 0.0);
  nodes_.push_back(n);
  return Var{static_cast<int>(nodes_.size() - 1)};
}

std::size_t Tape::alloc_aux(std::size_t n) {
  const std::size_t off = aux_.size();
  aux_.resize(off + n, 0.0);
  return off;
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) throw ShapeError("invalid tape variable");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const double* Tape::val(int id) const {
  const auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.op == Op::Param) return (*params_)[n.param].value.values.data();
  return values_.data() + n.off;
}

double* Tape::mval(int id) { return values_.data() + nodes_[static_cast<std::size_t>(id)].off; }

double* Tape::grad(int id) {
  const auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.op == Op::Param) return (*grads_)[n.param].data();
  return node_grads_.data() + n.off;
}

void Tape::check_finite(Var v, const char* op) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.id)];
  const double* p = val(v.id);
  for (std::size_t i = 0; i < n.rows * n.cols; ++i) {
    if (!std::isfinite(p[i])) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

Var Tape::param(ParamId id) {
  if (id >= params_->size()) throw ShapeError("parameter id out of range");
  const auto& t = (*params_)[id].value;
  Node n;
  n.op = Op::Param;
  n.rows = t.rows();
  n.cols = t.cols();
  n.param = id;
  n.needs_grad = grads_ != nullptr;
  nodes_.push_back(n);
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::constant(std::span<const double> values) { return constant(values, values.size(), 1); }

Var Tape::constant(std::span<const double> values, std::size_t rows, std::size_t cols) {
  require(values.size() == rows * cols, "constant", "value count does not match shape");
  const Var out = push(Op::Const, rows, cols);
  std::copy(values.begin(), values.end(), mval(out.id));
  check_finite(out, "constant");
  return out;
}

Var Tape::matvec(Var w, Var x) {
  const auto& nw = node(w);
  require(nw.cols == size(x), "matvec", "inner dimensions differ");
  const std::size_t m = nw.rows;
  const std::size_t n = nw.cols;
  const Var out = push(Op::MatVec, m, 1, w.id, x.id);
  gemv(val(w.id), val(x.id), nullptr, m, n, mval(out.id));
  check_finite(out, "matvec");
  return out;
}

Var Tape::affine(Var w, Var x, Var b) {
  const auto& nw = node(w);
  require(nw.cols == size(x), "affine", "inner dimensions differ");
  require(nw.rows == size(b), "affine", "bias length differs from output");
  const std::size_t m = nw.rows;
  const std::size_t n = nw.cols;
  const Var out = push(Op::Affine, m, 1, w.id, x.id, b.id);
  gemv(val(w.id), val(x.id), val(b.id), m, n, mval(out.id));
  check_finite(out, "affine");
  return out;
}

Var Tape::matmul_nt(Var a, Var w) {
  const auto& na = node(a);
  const auto& nw = node(w);
  require(na.cols == nw.cols, "matmul_nt", "inner dimensions differ");
  const std::size_t rows = na.rows;
  const std::size_t k = na.cols;
  const std::size_t m = nw.rows;
  const Var out = push(Op::MatMulNT, rows, m, a.id, w.id);
  const double* A = val(a.id);
  const double* W = val(w.id);
  double* Y = mval(out.id);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += A[r * k + j] * W[i * k + j];
      Y[r * m + i] = acc;
    }
  }
  check_finite(out, "matmul_nt");
  return out;
}

Var Tape::add(Var a, Var b) {
  require(size(a) == size(b), "add", "sizes differ");
  const Var out = push(Op::Add, rows(a), cols(a), a.id, b.id);
  const double* A = val(a.id);
  const double* B = val(b.id);
  double* Y = mval(out.id);
  for (std::size_t i = 0; i < size(out); ++i) Y[i] = A[i] + B[i];
  check_finite(out, "add");
  return out;
}

Var Tape::sub(Var a, Var b) {
  require(size(a) == size(b), "sub", "sizes differ");
  const Var out = push(Op::Sub, rows(a), cols(a), a.id, b.id);
  const double* A = val(a.id);
  const double* B = val(b.id);
  double* Y = mval(out.id);
  for (std::size_t i = 0; i < size(out); ++i) Y[i] = A[i] - B[i];
  check_finite(out, "sub");
  return out;
}

Var Tape::mul(Var a, Var b) {
  require(size(a) == size(b), "mul", "sizes differ");
  const Var out = push(Op::Mul, rows(a), cols(a), a.id, b.id);
  const double* A = val(a.id);
  const double* B = val(b.id);
  double* Y = mval(out.id);
  for (std::size_t i = 0; i < size(out); ++i) Y[i] = A[i] * B[i];
  check_finite(out, "mul");
  return out;
}

Var Tape::scale(Var a, double factor) {
  const Var out = push(Op::Scale, rows(a), cols(a), a.id);
  nodes_.back().factor = factor;
  const double* A = val(a.id);
  double* Y = mval(out.id);
  for (std::size_t i = 0; i < size(out); ++i) Y[i] = factor * A[i];
  check_finite(out, "scale");
  return out;
}

Var Tape::add_n(std::span<const Var> terms) {
  require(!terms.empty(), "add_n", "no terms");
  const std::size_t n = size(terms[0]);
  for (const Var t : terms) require(size(t) == n, "add_n", "sizes differ");
  const Var out = push(Op::AddN, rows(terms[0]), cols(terms[0]));
  auto& nd = nodes_.back();
  nd.args_off = args_.size();
  nd.args_n = terms.size();
  for (const Var t : terms) {
    args_.push_back(t.id);
    nd.needs_grad = nd.needs_grad || nodes_[static_cast<std::size_t>(t.id)].needs_grad;
  }
  double* Y = mval(out.id);
  for (const Var t : terms) {
    const double* T = val(t.id);
    for (std::size_t i = 0; i < n; ++i) Y[i] += T[i];
  }
  check_finite(out, "add_n");
  return out;
}

Var Tape::tanh(Var a) {
  const Var out = push(Op::Tanh, rows(a), cols(a), a.id);
  const double* A = val(a.id);
  double* Y = mval(out.id);
  for (std::size_t i = 0; i < size(out); ++i) Y[i] = std::tanh(A[i]);
  check_finite(out, "tanh");
  return out;
}

Var Tape::sigmoid(Var a) {
  const Var out = push(Op::Sigmoid, rows(a), cols(a), a.id);
  const double* A = val(a.id);
  double* Y = mval(out.id);
  for (std::size_t i = 0; i < size(out); ++i) Y[i] = sigmoid_of(A[i]);
  check_finite(out, "sigmoid");
  return out;
}

Var Tape::concat(std::span<const Var> parts) {
  require(!parts.empty(), "concat", "no parts");
  std::size_t total = 0;
  for (const Var p : parts) total += size(p);
  const Var out = push(Op::Concat, total, 1);
  auto& nd = nodes_.back();
  nd.args_off = args_.size();
  nd.args_n = parts.size();
  for (const Var p : parts) {
    args_.push_back(p.id);
    nd.needs_grad = nd.needs_grad || nodes_[static_cast<std::size_t>(p.id)].needs_grad;
  }
  double* Y = mval(out.id);
  for (const Var p : parts) {
    const double* P = val(p.id);
    Y = std::copy(P, P + size(p), Y);
  }
  return out;
}

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
  require(offset + length <= size(a), "slice", "range exceeds the input");
  const Var out = push(Op::Slice, length, 1, a.id);
  nodes_.back().index = offset;
  const double* A = val(a.id);
  std::copy(A + offset, A + offset + length, mval(out.id));
  return out;
}

Var Tape::stack_rows(std::span<const Var> rows_in) {
  require(!rows_in.empty(), "stack_rows", "no rows");
  const std::size_t k = size(rows_in[0]);
  for (const Var r : rows_in) require(size(r) == k, "stack_rows", "row sizes differ");
  const Var out = push(Op::StackRows, rows_in.size(), k);
  auto& nd = nodes_.back();
  nd.args_off = args_.size();
  nd.args_n = rows_in.size();
  for (const Var r : rows_in) {
    args_.push_back(r.id);
    nd.needs_grad = nd.needs_grad || nodes_[static_cast<std::size_t>(r.id)].needs_grad;
  }
  double* Y = mval(out.id);
  for (const Var r : rows_in) {
    const double* R = val(r.id);
    Y = std::copy(R, R + k, Y);
  }
  return out;
}

Var Tape::row(Var matrix, std::size_t i) {
  const auto& nm = node(matrix);
  require(i < nm.rows, "row", "index out of range");
  const std::size_t k = nm.cols;
  const Var out = push(Op::Row, k, 1, matrix.id);
  nodes_.back().index = i;
  const double* M = val(matrix.id);
  std::copy(M + i * k, M + (i + 1) * k, mval(out.id));
  return out;
}

Var Tape::additive_scores(Var query, Var keys, Var v) {
  const auto& nk = node(keys);
  const std::size_t n = nk.rows;
  const std::size_t m = nk.cols;
  require(n > 0, "additive_scores", "empty key set");
  require(size(query) == m && size(v) == m, "additive_scores", "query/v size differs from key width");
  const Var out = push(Op::AdditiveScores, n, 1, query.id, keys.id, v.id);
  const std::size_t aux = alloc_aux(n * m);
  nodes_.back().aux = aux;
  const double* Q = val(query.id);
  const double* K = val(keys.id);
  const double* V = val(v.id);
  double* T = aux_.data() + aux;
  double* Y = mval(out.id);
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double t = std::tanh(Q[j] + K[r * m + j]);
      T[r * m + j] = t;
      acc += V[j] * t;
    }
    Y[r] = acc;
  }
  check_finite(out, "additive_scores");
  return out;
}

Var Tape::softmax(Var a) {
  require(size(a) > 0, "softmax", "empty input");
  const Var out = push(Op::Softmax, rows(a), cols(a), a.id);
  const double* A = val(a.id);
  double* Y = mval(out.id);
  const std::size_t n = size(out);
  const double mx = *std::max_element(A, A + n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Y[i] = std::exp(A[i] - mx);
    z += Y[i];
  }
  for (std::size_t i = 0; i < n; ++i) Y[i] /= z;
  check_finite(out, "softmax");
  return out;
}

Var Tape::log_softmax(Var a) {
  require(size(a) > 0, "log_softmax", "empty input");
  const Var out = push(Op::LogSoftmax, rows(a), cols(a), a.id);
  const double* A = val(a.id);
  double* Y = mval(out.id);
  const std::size_t n = size(out);
  const double mx = *std::max_element(A, A + n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(A[i] - mx);
  const double lse = mx + std::log(z);
  for (std::size_t i = 0; i < n; ++i) Y[i] = A[i] - lse;
  check_finite(out, "log_softmax");
  return out;
}

Var Tape::weighted_rows(Var weights, Var rows_in) {
  const auto& nr = node(rows_in);
  require(size(weights) == nr.rows, "weighted_rows", "one weight per row required");
  const std::size_t n = nr.rows;
  const std::size_t k = nr.cols;
  const Var out = push(Op::WeightedRows, k, 1, weights.id, rows_in.id);
  const double* Wt = val(weights.id);
  const double* H = val(rows_in.id);
  double* Y = mval(out.id);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < k; ++j) Y[j] += Wt[r] * H[r * k + j];
  }
  check_finite(out, "weighted_rows");
  return out;
}

Var Tape::pick(Var a, std::size_t i) {
  require(i < size(a), "pick", "index out of range");
  const Var out = push(Op::Pick, 1, 1, a.id);
  nodes_.back().index = i;
  mval(out.id)[0] = val(a.id)[i];
  return out;
}

Var Tape::sum(Var a) {
  const Var out = push(Op::Sum, 1, 1, a.id);
  const double* A = val(a.id);
  double acc = 0.0;
  for (std::size_t i = 0; i < size(a); ++i) acc += A[i];
  mval(out.id)[0] = acc;
  check_finite(out, "sum");
  return out;
}

Var Tape::dot(Var a, Var b) {
  require(size(a) == size(b), "dot", "sizes differ");
  const Var out = push(Op::Dot, 1, 1, a.id, b.id);
  const double* A = val(a.id);
  const double* B = val(b.id);
  double acc = 0.0;
  for (std::size_t i = 0; i < size(a); ++i) acc += A[i] * B[i];
  mval(out.id)[0] = acc;
  check_finite(out, "dot");
  return out;
}

std::span<const double> Tape::value(Var v) const {
  const auto& n = node(v);
  return {val(v.id), n.rows * n.cols};
}

double Tape::scalar(Var v) const {
  const auto& n = node(v);
  if (n.rows * n.cols != 1) throw ShapeError("scalar() on a non-scalar value");
  return val(v.id)[0];
}

std::size_t Tape::rows(Var v) const { return node(v).rows; }
std::size_t Tape::cols(Var v) const { return node(v).cols; }

void Tape::rewind(std::size_t mark) {
  if (mark > nodes_.size()) throw ShapeError("rewind past the end of the tape");
  if (mark == nodes_.size()) return;
  const auto& first = nodes_[mark];
  // Param nodes own no arena storage; find the first node that does.
  std::size_t values_end = values_.size();
  std::size_t aux_end = aux_.size();
  std::size_t args_end = args_.size();
  bool found_values = false;
  for (std::size_t i = mark; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.op == Op::Param) continue;
    if (!found_values) {
      values_end = n.off;
      found_values = true;
    }
    if (n.op == Op::AdditiveScores) aux_end = std::min(aux_end, n.aux);
    if (n.op == Op::AddN || n.op == Op::Concat || n.op == Op::StackRows) args_end = std::min(args_end, n.args_off);
  }
  (void)first;
  values_.resize(values_end);
  aux_.resize(aux_end);
  args_.resize(args_end);
  nodes_.resize(mark);
}

void Tape::backward(Var root, double seed) {
  const auto& r = node(root);
  if (r.rows * r.cols != 1) throw ShapeError("backward() requires a scalar root");
  if (grads_ == nullptr) throw ShapeError("backward() on a tape without a gradient set");
  if (!r.needs_grad) return;
  node_grads_.assign(values_.size(), 0.0);
  grad(root.id)[0] = seed;
  for (std::size_t i = static_cast<std::size_t>(root.id) + 1; i-- > 0;) {
    if (nodes_[i].needs_grad && nodes_[i].op != Op::Param && nodes_[i].op != Op::Const) backprop_node(i);
  }
  for (auto& g : grads_->grads) {
    for (double x : g) {
      if (!std::isfinite(x)) throw NumericError("non-finite gradient");
    }
  }
}

void Tape::backprop_node(std::size_t i) {
  const Node nd = nodes_[i];
  const int self = static_cast<int>(i);
  const double* G = grad(self);
  const std::size_t n = nd.rows * nd.cols;
  auto wants = [&](int id) { return id >= 0 && nodes_[static_cast<std::size_t>(id)].needs_grad; };

  switch (nd.op) {
    case Op::Param:
    case Op::Const: break;

    case Op::MatVec:
    case Op::Affine: {
      const auto& nw = nodes_[static_cast<std::size_t>(nd.a)];
      const std::size_t m = nw.rows;
      const std::size_t k = nw.cols;
      const double* W = val(nd.a);
      const double* X = val(nd.b);
      const bool gw = wants(nd.a);
      const bool gx = wants(nd.b);
      double* gW = gw ? grad(nd.a) : nullptr;
      double* gX = gx ? grad(nd.b) : nullptr;
      for (std::size_t r = 0; r < m; ++r) {
        const double g = G[r];
        if (g == 0.0) continue;
        const double* row = W + r * k;
        if (gw && gx) {
          double* grow = gW + r * k;
          for (std::size_t j = 0; j < k; ++j) {
            grow[j] += g * X[j];
            gX[j] += g * row[j];
          }
        } else if (gw) {
          double* grow = gW + r * k;
          for (std::size_t j = 0; j < k; ++j) grow[j] += g * X[j];
        } else if (gx) {
          for (std::size_t j = 0; j < k; ++j) gX[j] += g * row[j];
        }
      }
      if (nd.op == Op::Affine && wants(nd.c)) {
        double* gB = grad(nd.c);
        for (std::size_t r = 0; r < m; ++r) gB[r] += G[r];
      }
      break;
    }

    case Op::MatMulNT: {
      const auto& na = nodes_[static_cast<std::size_t>(nd.a)];
      const std::size_t rows = na.rows;
      const std::size_t k = na.cols;
      const std::size_t m = nd.cols;
      const double* A = val(nd.a);
      const double* W = val(nd.b);
      const bool ga = wants(nd.a);
      const bool gw = wants(nd.b);
      double* gA = ga ? grad(nd.a) : nullptr;
      double* gW = gw ? grad(nd.b) : nullptr;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t q = 0; q < m; ++q) {
          const double g = G[r * m + q];
          if (g == 0.0) continue;
          if (ga) {
            for (std::size_t j = 0; j < k; ++j) gA[r * k + j] += g * W[q * k + j];
          }
          if (gw) {
            for (std::size_t j = 0; j < k; ++j) gW[q * k + j] += g * A[r * k + j];
          }
        }
      }
      break;
    }

    case Op::Add:
    case Op::Sub: {
      const double sign = nd.op == Op::Add ? 1.0 : -1.0;
      if (wants(nd.a)) {
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < n; ++j) gA[j] += G[j];
      }
      if (wants(nd.b)) {
        double* gB = grad(nd.b);
        for (std::size_t j = 0; j < n; ++j) gB[j] += sign * G[j];
      }
      break;
    }

    case Op::Mul: {
      const double* A = val(nd.a);
      const double* B = val(nd.b);
      if (wants(nd.a)) {
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < n; ++j) gA[j] += G[j] * B[j];
      }
      if (wants(nd.b)) {
        double* gB = grad(nd.b);
        for (std::size_t j = 0; j < n; ++j) gB[j] += G[j] * A[j];
      }
      break;
    }

    case Op::Scale: {
      if (wants(nd.a)) {
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < n; ++j) gA[j] += nd.factor * G[j];
      }
      break;
    }

    case Op::AddN: {
      for (std::size_t t = 0; t < nd.args_n; ++t) {
        const int id = args_[nd.args_off + t];
        if (!wants(id)) continue;
        double* gT = grad(id);
        for (std::size_t j = 0; j < n; ++j) gT[j] += G[j];
      }
      break;
    }

    case Op::Tanh: {
      if (wants(nd.a)) {
        const double* Y = val(self);
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < n; ++j) gA[j] += G[j] * (1.0 - Y[j] * Y[j]);
      }
      break;
    }

    case Op::Sigmoid: {
      if (wants(nd.a)) {
        const double* Y = val(self);
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < n; ++j) gA[j] += G[j] * Y[j] * (1.0 - Y[j]);
      }
      break;
    }

    case Op::Concat:
    case Op::StackRows: {
      std::size_t pos = 0;
      for (std::size_t t = 0; t < nd.args_n; ++t) {
        const int id = args_[nd.args_off + t];
        const auto& np = nodes_[static_cast<std::size_t>(id)];
        const std::size_t len = np.rows * np.cols;
        if (wants(id)) {
          double* gP = grad(id);
          for (std::size_t j = 0; j < len; ++j) gP[j] += G[pos + j];
        }
        pos += len;
      }
      break;
    }

    case Op::Slice: {
      if (wants(nd.a)) {
        double* gA = grad(nd.a) + nd.index;
        for (std::size_t j = 0; j < n; ++j) gA[j] += G[j];
      }
      break;
    }

    case Op::Row: {
      if (wants(nd.a)) {
        double* gM = grad(nd.a) + nd.index * n;
        for (std::size_t j = 0; j < n; ++j) gM[j] += G[j];
      }
      break;
    }

    case Op::AdditiveScores: {
      const auto& nk = nodes_[static_cast<std::size_t>(nd.b)];
      const std::size_t rows = nk.rows;
      const std::size_t m = nk.cols;
      const double* V = val(nd.c);
      const double* T = aux_.data() + nd.aux;
      const bool gq = wants(nd.a);
      const bool gk = wants(nd.b);
      const bool gv = wants(nd.c);
      double* gQ = gq ? grad(nd.a) : nullptr;
      double* gK = gk ? grad(nd.b) : nullptr;
      double* gV = gv ? grad(nd.c) : nullptr;
      for (std::size_t r = 0; r < rows; ++r) {
        const double g = G[r];
        if (g == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) {
          const double t = T[r * m + j];
          const double d = g * V[j] * (1.0 - t * t);
          if (gq) gQ[j] += d;
          if (gk) gK[r * m + j] += d;
          if (gv) gV[j] += g * t;
        }
      }
      break;
    }

    case Op::Softmax: {
      if (wants(nd.a)) {
        const double* Y = val(self);
        double dotgy = 0.0;
        for (std::size_t j = 0; j < n; ++j) dotgy += G[j] * Y[j];
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < n; ++j) gA[j] += Y[j] * (G[j] - dotgy);
      }
      break;
    }

    case Op::LogSoftmax: {
      if (wants(nd.a)) {
        const double* Y = val(self);
        double gsum = 0.0;
        for (std::size_t j = 0; j < n; ++j) gsum += G[j];
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < n; ++j) gA[j] += G[j] - std::exp(Y[j]) * gsum;
      }
      break;
    }

    case Op::WeightedRows: {
      const auto& nr = nodes_[static_cast<std::size_t>(nd.b)];
      const std::size_t rows = nr.rows;
      const std::size_t k = nr.cols;
      const double* Wt = val(nd.a);
      const double* H = val(nd.b);
      if (wants(nd.a)) {
        double* gW = grad(nd.a);
        for (std::size_t r = 0; r < rows; ++r) {
          double acc = 0.0;
          for (std::size_t j = 0; j < k; ++j) acc += G[j] * H[r * k + j];
          gW[r] += acc;
        }
      }
      if (wants(nd.b)) {
        double* gH = grad(nd.b);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < k; ++j) gH[r * k + j] += Wt[r] * G[j];
        }
      }
      break;
    }

    case Op::Pick: {
      if (wants(nd.a)) grad(nd.a)[nd.index] += G[0];
      break;
    }

    case Op::Sum: {
      if (wants(nd.a)) {
        const auto& na = nodes_[static_cast<std::size_t>(nd.a)];
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < na.rows * na.cols; ++j) gA[j] += G[0];
      }
      break;
    }

    case Op::Dot: {
      const auto& na = nodes_[static_cast<std::size_t>(nd.a)];
      const std::size_t len = na.rows * na.cols;
      const double* A = val(nd.a);
      const double* B = val(nd.b);
      if (wants(nd.a)) {
        double* gA = grad(nd.a);
        for (std::size_t j = 0; j < len; ++j) gA[j] += G[0] * B[j];
      }
      if (wants(nd.b)) {
        double* gB = grad(nd.b);
        for (std::size_t j = 0; j < len; ++j) gB[j] += G[0] * A[j];
      }
      break;
    }
  }
}

}  // namespace vransplit
