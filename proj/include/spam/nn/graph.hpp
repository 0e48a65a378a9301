#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace spam {
class Rng;
}

namespace spam::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Parameters are stored in double precision but always hold values that are
/// exactly representable as float32, so checkpoints round-trip bit-exactly.
struct Parameter {
  std::string name;
  Matrix value;
  bool frozen = false;
};

class ParameterStore {
 public:
  /// Registers a tensor; `init` is rounded to float32. Names must be unique.
  std::size_t add(std::string name, Matrix init, bool frozen = false);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }

  /// Index of a named parameter; throws UsageError when absent.
  std::size_t index_of(const std::string& name) const;

  /// Round every parameter to the nearest float32.
  void round_to_float();

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

/// One gradient tensor per parameter, shaped like the parameter.
class Gradients {
 public:
  explicit Gradients(const ParameterStore& store);

  Matrix& operator[](std::size_t i) { return grads_[i]; }
  const Matrix& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const { return grads_.size(); }

  void zero();
  Gradients& operator+=(const Gradients& other);
  void scale(double s);
  double norm() const;

 private:
  std::vector<Matrix> grads_;
};

/// Handle to a node in a Graph.
struct Var {
  int id = -1;
};

/// Tape-based reverse-mode differentiation over row-major matrices. Sequences
/// are T x h matrices (one row per frame or token); vectors are 1 x h rows.
///
/// Nodes only record backward closures when some input needs a gradient, so
/// a Graph built without a Gradients sink is a plain forward evaluator.
class Graph {
 public:
  explicit Graph(const ParameterStore& store, Gradients* sink = nullptr);

  Var constant(Matrix value);
  Var param(std::size_t index);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
  /// Accumulated gradient of a node (zeros if nothing reached it).
  Matrix grad(Var v) const;

  /// Adds an upstream gradient to an output node.
  void seed(Var v, const Matrix& g);
  /// Propagates seeded gradients back to parameters.
  void backward();

  std::size_t num_nodes() const { return nodes_.size(); }

  // Ops.
  Var matmul(Var a, Var b);
  /// a * b^T
  Var matmul_nt(Var a, Var b);
  /// x * w + bias (bias broadcast over rows).
  Var affine(Var x, Var w, Var bias);
  Var add(Var a, Var b);
  /// Adds a 1 x n row to every row of a.
  Var add_row(Var a, Var row);
  Var scale(Var a, double s);
  Var gelu(Var a);
  Var tanh(Var a);
  /// Row-wise layer normalization with elementwise gain and bias rows.
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var softmax_rows(Var a);
  /// 1 x n mean over rows.
  Var mean_rows(Var a);
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
  Var concat_cols(std::span<const Var> parts);
  Var gather_rows(Var table, std::span<const int> rows);
  /// out[t] = a[t - offset], zero where t - offset is out of range.
  Var shift_rows(Var a, Eigen::Index offset);
  /// Divides a 1 x n row by its Euclidean norm.
  Var l2_normalize(Var a);
  /// Inverted dropout; identity when p == 0.
  Var dropout(Var a, double p, Rng& rng);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    std::function<void()> backward;
  };

  Var push(Matrix value, bool needs_grad);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  void accumulate(Var v, const Matrix& g);

  template <typename Fn>
  void on_backward(Var out, Fn&& fn) {
    nodes_[static_cast<std::size_t>(out.id)].backward = std::forward<Fn>(fn);
  }

  const ParameterStore& store_;
  Gradients* sink_;
  std::vector<Node> nodes_;
};

}  // namespace spam::nn
