#include "spam/nn/graph.hpp"

#include <cmath>
#include <numbers>

#include "spam/core/error.hpp"
#include "spam/core/rng.hpp"

namespace spam::nn {

std::size_t ParameterStore::add(std::string name, Matrix init, bool frozen) {
  if (by_name_.count(name)) throw UsageError("duplicate parameter '" + name + "'");
  init = init.cast<float>().cast<double>();
  by_name_.emplace(name, params_.size());
  params_.push_back({std::move(name), std::move(init), frozen});
  return params_.size() - 1;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) throw UsageError("unknown parameter '" + name + "'");
  return it->second;
}

void ParameterStore::round_to_float() {
  for (auto& p : params_) p.value = p.value.cast<float>().cast<double>();
}

Gradients::Gradients(const ParameterStore& store) {
  grads_.reserve(store.size());
  for (const auto& p : store.all()) grads_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
}

void Gradients::zero() {
  for (auto& g : grads_) g.setZero();
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
  return *this;
}

void Gradients::scale(double s) {
  for (auto& g : grads_) g *= s;
}

double Gradients::norm() const {
  double sq = 0.0;
  for (const auto& g : grads_) sq += g.squaredNorm();
  return std::sqrt(sq);
}

Graph::Graph(const ParameterStore& store, Gradients* sink) : store_(store), sink_(sink) {
  nodes_.reserve(256);
}

Var Graph::push(Matrix value, bool needs_grad) {
  nodes_.push_back({std::move(value), Matrix(), needs_grad, nullptr});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

void Graph::accumulate(Var v, const Matrix& g) {
  Node& n = node(v);
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) n.grad = g;
  else n.grad += g;
}

Matrix Graph::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::seed(Var v, const Matrix& g) {
  if (g.rows() != value(v).rows() || g.cols() != value(v).cols()) {
    throw UsageError("seed gradient shape mismatch");
  }
  accumulate(v, g);
}

void Graph::backward() {
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].backward && nodes_[i].grad.size() != 0) nodes_[i].backward();
  }
}

Var Graph::constant(Matrix value) { return push(std::move(value), false); }

Var Graph::param(std::size_t index) {
  const Parameter& p = store_[index];
  const bool trainable = sink_ != nullptr && !p.frozen;
  Var v = push(p.value, trainable);
  if (trainable) {
    on_backward(v, [this, v, index] { (*sink_)[index] += node(v).grad; });
  }
  return v;
}

Var Graph::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw UsageError("matmul shape mismatch");
  Var out = push(value(a) * value(b), needs_grad(a) || needs_grad(b));
  if (needs_grad(out)) {
    on_backward(out, [this, a, b, out] {
      const Matrix& g = node(out).grad;
      if (needs_grad(a)) accumulate(a, g * value(b).transpose());
      if (needs_grad(b)) accumulate(b, value(a).transpose() * g);
    });
  }
  return out;
}

Var Graph::matmul_nt(Var a, Var b) {
  if (value(a).cols() != value(b).cols()) throw UsageError("matmul_nt shape mismatch");
  Var out = push(value(a) * value(b).transpose(), needs_grad(a) || needs_grad(b));
  if (needs_grad(out)) {
    on_backward(out, [this, a, b, out] {
      const Matrix& g = node(out).grad;
      if (needs_grad(a)) accumulate(a, g * value(b));
      if (needs_grad(b)) accumulate(b, g.transpose() * value(a));
    });
  }
  return out;
}

Var Graph::affine(Var x, Var w, Var bias) {
  if (value(x).cols() != value(w).rows() || value(bias).rows() != 1 ||
      value(bias).cols() != value(w).cols()) {
    throw UsageError("affine shape mismatch");
  }
  Matrix y = value(x) * value(w);
  y.rowwise() += value(bias).row(0);
  Var out = push(std::move(y), needs_grad(x) || needs_grad(w) || needs_grad(bias));
  if (needs_grad(out)) {
    on_backward(out, [this, x, w, bias, out] {
      const Matrix& g = node(out).grad;
      if (needs_grad(x)) accumulate(x, g * value(w).transpose());
      if (needs_grad(w)) accumulate(w, value(x).transpose() * g);
      if (needs_grad(bias)) accumulate(bias, g.colwise().sum());
    });
  }
  return out;
}

Var Graph::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw UsageError("add shape mismatch");
  }
  Var out = push(value(a) + value(b), needs_grad(a) || needs_grad(b));
  if (needs_grad(out)) {
    on_backward(out, [this, a, b, out] {
      const Matrix& g = node(out).grad;
      accumulate(a, g);
      accumulate(b, g);
    });
  }
  return out;
}

Var Graph::add_row(Var a, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
    throw UsageError("add_row shape mismatch");
  }
  Matrix y = value(a);
  y.rowwise() += value(row).row(0);
  Var out = push(std::move(y), needs_grad(a) || needs_grad(row));
  if (needs_grad(out)) {
    on_backward(out, [this, a, row, out] {
      const Matrix& g = node(out).grad;
      accumulate(a, g);
      if (needs_grad(row)) accumulate(row, g.colwise().sum());
    });
  }
  return out;
}

Var Graph::scale(Var a, double s) {
  Var out = push(value(a) * s, needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, s, out] { accumulate(a, node(out).grad * s); });
  }
  return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var Graph::gelu(Var a) {
  const Matrix& x = value(a);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    y.data()[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  }
  Var out = push(std::move(y), needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, out] {
      const Matrix& x = value(a);
      const Matrix& g = node(out).grad;
      Matrix dx(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = x.data()[i];
        const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
        const double dt = (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        dx.data()[i] = g.data()[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
      }
      accumulate(a, dx);
    });
  }
  return out;
}

Var Graph::tanh(Var a) {
  Var out = push(value(a).array().tanh().matrix(), needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, out] {
      const Matrix& y = value(out);
      accumulate(a, (node(out).grad.array() * (1.0 - y.array().square())).matrix());
    });
  }
  return out;
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Matrix& in = value(x);
  const Eigen::Index n = in.cols();
  if (value(gain).cols() != n || value(bias).cols() != n) throw UsageError("layer_norm shape mismatch");
  Matrix normed(in.rows(), n);
  Eigen::VectorXd inv_std(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mean = in.row(r).mean();
    const double var = (in.row(r).array() - mean).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    normed.row(r) = (in.row(r).array() - mean) * inv_std[r];
  }
  Matrix y = normed.array().rowwise() * value(gain).row(0).array();
  y.rowwise() += value(bias).row(0);
  Var out = push(std::move(y), needs_grad(x) || needs_grad(gain) || needs_grad(bias));
  if (needs_grad(out)) {
    on_backward(out, [this, x, gain, bias, out, normed = std::move(normed),
                      inv_std = std::move(inv_std)] {
      const Matrix& g = node(out).grad;
      if (needs_grad(gain)) accumulate(gain, (g.array() * normed.array()).colwise().sum().matrix());
      if (needs_grad(bias)) accumulate(bias, g.colwise().sum());
      if (needs_grad(x)) {
        const Matrix gn = g.array().rowwise() * value(gain).row(0).array();
        Matrix dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const double m1 = gn.row(r).mean();
          const double m2 = gn.row(r).dot(normed.row(r)) / static_cast<double>(g.cols());
          dx.row(r) = (gn.row(r).array() - m1 - normed.row(r).array() * m2) * inv_std[r];
        }
        accumulate(x, dx);
      }
    });
  }
  return out;
}

Var Graph::softmax_rows(Var a) {
  const Matrix& x = value(a);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  Var out = push(std::move(y), needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, out] {
      const Matrix& y = value(out);
      const Matrix& g = node(out).grad;
      const Eigen::VectorXd dots = (g.array() * y.array()).rowwise().sum();
      Matrix dx = y.array() * (g.array().colwise() - dots.array());
      accumulate(a, dx);
    });
  }
  return out;
}

Var Graph::mean_rows(Var a) {
  const Matrix& x = value(a);
  if (x.rows() == 0) throw UsageError("mean over zero rows");
  Var out = push(x.colwise().mean(), needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, out] {
      const Eigen::Index rows = value(a).rows();
      Matrix dx = node(out).grad.replicate(rows, 1) / static_cast<double>(rows);
      accumulate(a, dx);
    });
  }
  return out;
}

Var Graph::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  const Matrix& x = value(a);
  if (start < 0 || count < 0 || start + count > x.cols()) throw UsageError("slice_cols out of range");
  Var out = push(x.middleCols(start, count), needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, start, count, out] {
      Matrix dx = Matrix::Zero(value(a).rows(), value(a).cols());
      dx.middleCols(start, count) = node(out).grad;
      accumulate(a, dx);
    });
  }
  return out;
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat of nothing");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool any_grad = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw UsageError("concat_cols row mismatch");
    cols += value(p).cols();
    any_grad = any_grad || needs_grad(p);
  }
  Matrix y(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    y.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  Var out = push(std::move(y), any_grad);
  if (any_grad) {
    on_backward(out, [this, parts = std::vector<Var>(parts.begin(), parts.end()), out] {
      Eigen::Index at = 0;
      for (Var p : parts) {
        const Eigen::Index c = value(p).cols();
        if (needs_grad(p)) accumulate(p, node(out).grad.middleCols(at, c));
        at += c;
      }
    });
  }
  return out;
}

Var Graph::gather_rows(Var table, std::span<const int> rows) {
  const Matrix& t = value(table);
  Matrix y(static_cast<Eigen::Index>(rows.size()), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= t.rows()) throw UsageError("gather_rows index out of range");
    y.row(static_cast<Eigen::Index>(i)) = t.row(rows[i]);
  }
  Var out = push(std::move(y), needs_grad(table));
  if (needs_grad(out)) {
    on_backward(out, [this, table, idx = std::vector<int>(rows.begin(), rows.end()), out] {
      Matrix dt = Matrix::Zero(value(table).rows(), value(table).cols());
      const Matrix& g = node(out).grad;
      for (std::size_t i = 0; i < idx.size(); ++i) dt.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
      accumulate(table, dt);
    });
  }
  return out;
}

Var Graph::shift_rows(Var a, Eigen::Index offset) {
  const Matrix& x = value(a);
  const Eigen::Index n = x.rows();
  Matrix y = Matrix::Zero(n, x.cols());
  const Eigen::Index k = std::min<Eigen::Index>(std::abs(offset), n);
  if (offset >= 0) y.bottomRows(n - k) = x.topRows(n - k);
  else y.topRows(n - k) = x.bottomRows(n - k);
  Var out = push(std::move(y), needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, offset, k, n, out] {
      const Matrix& g = node(out).grad;
      Matrix dx = Matrix::Zero(g.rows(), g.cols());
      if (offset >= 0) dx.topRows(n - k) = g.bottomRows(n - k);
      else dx.bottomRows(n - k) = g.topRows(n - k);
      accumulate(a, dx);
    });
  }
  return out;
}

Var Graph::l2_normalize(Var a) {
  const Matrix& x = value(a);
  if (x.rows() != 1) throw UsageError("l2_normalize expects a row vector");
  const double norm = x.norm();
  if (!(norm > 0.0)) throw RuntimeFailure("cannot normalize a zero vector");
  Var out = push(x / norm, needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, norm, out] {
      const Matrix& y = value(out);
      const Matrix& g = node(out).grad;
      accumulate(a, (g - y * y.row(0).dot(g.row(0))) / norm);
    });
  }
  return out;
}

Var Graph::dropout(Var a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw UsageError("dropout rate must be below 1");
  const Matrix& x = value(a);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < p ? 0.0 : 1.0 / (1.0 - p);
  Var out = push(x.cwiseProduct(mask), needs_grad(a));
  if (needs_grad(out)) {
    on_backward(out, [this, a, out, mask = std::move(mask)] {
      accumulate(a, node(out).grad.cwiseProduct(mask));
    });
  }
  return out;
}

}  // namespace spam::nn
