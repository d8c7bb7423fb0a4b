#pragma once

#include <functional>
#include <vector>

#include "dip/matrix.hpp"

namespace dip::ad {

/// Handle to a node on a Tape.
struct Var {
  std::size_t index = static_cast<std::size_t>(-1);
};

/// Reverse-mode automatic differentiation over Matrix-valued nodes.
///
/// A Tape records one forward computation; backward() runs the reverse
/// sweep from a scalar (1x1) root and accumulates gradients into every
/// node created with param(). Nodes created with constant() block
/// gradient flow into themselves but pass it through, which is exactly
/// the freeze discipline: encoder weights are constants, prompt factors
/// are params.
///
/// Tapes are single-use and single-threaded; build, backward, read
/// grads, discard.
class Tape {
 public:
  Var constant(Matrix value);
  Var param(Matrix value);

  const Matrix& value(Var v) const { return node(v).value; }
  const Matrix& grad(Var v) const;
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a 1x1 root with seed gradient 1.
  void backward(Var scalar_root);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var matmul(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var transpose(Var a);
  /// Rows of all parts stacked top to bottom; columns must agree.
  Var concat_rows(const std::vector<Var>& parts);
  /// Row window [begin, end).
  Var slice_rows(Var a, std::size_t begin, std::size_t end);
  /// bias is 1 x d, added to every row of x.
  Var add_row_broadcast(Var x, Var bias);
  Var softmax_rows(Var a);
  /// Layer normalization per row with unit gain and zero shift.
  Var layer_norm_rows(Var a, double eps = 1e-5);
  Var gelu(Var a);
  /// L2-normalize each row.
  Var normalize_rows(Var a);
  /// -log softmax(logits)[label] for a 1 x C logits row; returns 1x1.
  Var cross_entropy_logits(Var logits, int label);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;
  };

  Var push(Matrix value, bool requires_grad, std::function<void(Tape&)> back);
  Node& node(Var v) { return nodes_[v.index]; }
  const Node& node(Var v) const { return nodes_[v.index]; }
  void accumulate(std::size_t index, const Matrix& delta);

  std::vector<Node> nodes_;
  bool swept_ = false;
};

}  // namespace dip::ad
