#pragma once
// Minimal reverse-mode differentiation over dense matrices.
//
// A Graph records operations eagerly: every op computes its value immediately
// and registers a closure that propagates adjoints to its inputs. Calling
// backward() on a 1 x 1 node walks the tape in reverse creation order and
// leaves the adjoints on the graph; accumulate_param_grads() adds them into
// the caller's Param::grad. Forward code only ever sees const parameters. A
// Graph is meant to live for one forward/backward pass.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "augsum/matrix.hpp"

namespace augsum {

/// A named, trainable tensor with its accumulated gradient.
struct Param {
  Param() = default;
  Param(std::string param_name, std::size_t rows, std::size_t cols)
      : name(std::move(param_name)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Matrix value;
  Matrix grad;
  /// Frozen parameters take part in the forward pass but receive no gradient.
  bool frozen = false;
};

namespace ag {

struct Var {
  std::uint32_t id = 0;
};

class Graph {
 public:
  /// With record_gradients = false no backward closures are created.
  explicit Graph(bool record_gradients = true) : record_gradients_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var parameter(const Param& param);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  /// Adjoint of v after backward(); a zero matrix if nothing flowed into v.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  /// a * b^T
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// Adds a 1 x n row to every row of a.
  Var add_row(Var a, Var row);
  /// Elementwise product.
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  /// alpha * a + beta, elementwise.
  Var affine(Var a, double alpha, double beta);
  Var gelu(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  /// Row-wise layer normalization with 1 x n gain and offset.
  Var layer_norm(Var x, Var gain, Var offset, double eps);
  /// Row-wise softmax. Columns whose key_valid entry is false get probability
  /// exactly zero. An empty span means every column is valid.
  Var softmax_rows(Var x, std::span<const std::uint8_t> key_valid = {});
  /// Row r of the result is row rows[r] of a.
  Var gather_rows(Var a, std::span<const std::size_t> rows);
  /// Copy of x with src row i added to row positions[i].
  Var add_rows_at(Var x, std::span<const std::size_t> positions, Var src);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_cols(Var a, std::size_t begin, std::size_t count);
  Var sum(Var a);

  /// Mean over rows of -log softmax(logits_r)[targets_r]; 1 x 1. Zero rows
  /// give a constant 0.
  Var softmax_cross_entropy(Var logits, std::span<const std::size_t> targets);
  /// Mean binary cross-entropy of sigmoid(logits) against labels over rows
  /// with include[r] set; probabilities are clamped to [1e-12, 1 - 1e-12].
  Var bce_with_logits(Var logits, std::span<const double> labels,
                      std::span<const std::uint8_t> include);

  /// Seeds d(root)/d(root) = 1 and propagates to every node.
  void backward(Var root);
  /// Adds the adjoints of parameter nodes into the matching Param::grad
  /// (matched by address). Parameters bound several times receive the sum.
  void accumulate_param_grads(std::span<Param* const> params) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    const Param* param = nullptr;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var push(Matrix value, bool requires_grad);
  Matrix& grad_ref(Var v);
  bool any_requires_grad(std::initializer_list<Var> vars) const;

  bool record_gradients_ = true;
  std::vector<Node> nodes_;
};

}  // namespace ag
}  // namespace augsum
