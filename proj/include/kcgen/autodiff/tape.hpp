// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation of one forward pass. Leaves are constants,
// free inputs, or references to persistent Parameters; backward() walks the
// tape in reverse and accumulates into Parameter::grad. Row vectors (1 x n)
// are used for per-timestep states.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kcgen::ad {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  /// Gradient after backward(); zero-sized if the node was not reached.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// With record=false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf with its own gradient slot (for differentiating w.r.t. inputs).
  Var input(Matrix value);
  Var param(Parameter& p);

  /// Seeds d(out)/d(out) = 1 for a 1x1 output, or the given seed otherwise.
  void backward(Var out);
  void backward(Var out, const Matrix& seed);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  using Backward = std::function<void(Tape&, int self)>;
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  /// Gradient slot of an input node, allocated as zeros on first use; null when
  /// the node does not require gradients.
  Matrix* grad_slot(int id);
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };
  bool record_;
  std::vector<Node> nodes_;
};

// ---- operations ----------------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Adds a 1 x n row to every row of a.
Var add_row(Var a, Var row);
Var sigmoid(Var a);
Var tanh(Var a);
/// tanh approximation of GELU.
Var gelu(Var a);
/// Row-wise softmax. With causal=true, entry (i, j) for j > i is masked out.
Var softmax_rows(Var a, bool causal = false);
Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Mean over rows: (T x n) -> (1 x n).
Var mean_rows(Var a);
/// Mean over columns of a 1 x n row, restricted to a 0/1 mask: -> (1 x 1).
Var masked_mean(Var row, std::span<const int> mask);
Var sum_all(Var a);
/// Rows of an embedding table selected by index.
Var gather_rows(Var table, std::span<const int> ids);
/// Sum over rows of -log softmax(logits)[row, target]; target < 0 is skipped.
Var cross_entropy_sum(Var logits, std::span<const int> targets);
/// -[y log p + (1-y) log(1-p)] for a 1x1 probability clamped to [eps, 1-eps].
Var binary_cross_entropy(Var p, double target, double eps);
/// m * a + (1 - m) * b for 1x1 m and same-shape a, b.
Var lerp(Var m, Var a, Var b);
/// a * s for a 1x1 var s.
Var scale_by(Var a, Var s);
Var add_scalar(Var a, double c);

}  // namespace kcgen::ad
