#include "spam/model/layers.hpp"

#include <cmath>

#include "spam/core/error.hpp"

namespace spam::model {

std::size_t Initializer::weight(const std::string& name, Eigen::Index in, Eigen::Index out, bool frozen) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  nn::Matrix m(in, out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng_.uniform(-limit, limit);
  return store_.add(name, std::move(m), frozen);
}

std::size_t Initializer::constant(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                  double value) {
  return store_.add(name, nn::Matrix::Constant(rows, cols, value));
}

std::size_t Initializer::normal(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                double stddev, bool frozen) {
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng_.normal();
  return store_.add(name, std::move(m), frozen);
}

Linear Linear::create(Initializer& init, const std::string& name, Eigen::Index in, Eigen::Index out) {
  return {init.weight(name + ".weight", in, out), init.constant(name + ".bias", 1, out, 0.0)};
}

FeedForward FeedForward::create(Initializer& init, const std::string& name, Eigen::Index in,
                                Eigen::Index hidden, Eigen::Index out) {
  return {Linear::create(init, name + ".0", in, hidden), Linear::create(init, name + ".1", hidden, out)};
}

LayerNorm LayerNorm::create(Initializer& init, const std::string& name, Eigen::Index width) {
  return {init.constant(name + ".gain", 1, width, 1.0), init.constant(name + ".bias", 1, width, 0.0)};
}

MultiHeadAttention MultiHeadAttention::create(Initializer& init, const std::string& name,
                                              Eigen::Index width, int heads) {
  if (heads <= 0 || width % heads != 0) throw UsageError("width must be divisible by the head count");
  MultiHeadAttention mha;
  mha.query = Linear::create(init, name + ".query", width, width);
  mha.key = init.weight(name + ".key.weight", width, width);
  mha.value = Linear::create(init, name + ".value", width, width);
  mha.output = Linear::create(init, name + ".output", width, width);
  mha.heads = heads;
  return mha;
}

MultiHeadAttention::Result MultiHeadAttention::operator()(nn::Graph& g, nn::Var queries,
                                                          nn::Var keys_values) const {
  const nn::Var q = query(g, queries);
  const nn::Var k = g.matmul(keys_values, g.param(key));
  const nn::Var v = value(g, keys_values);
  const Eigen::Index width = g.value(q).cols();
  const Eigen::Index head_width = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_width));

  Result result;
  std::vector<nn::Var> outputs;
  for (int h = 0; h < heads; ++h) {
    const Eigen::Index at = h * head_width;
    const nn::Var scores = g.scale(g.matmul_nt(g.slice_cols(q, at, head_width), g.slice_cols(k, at, head_width)), scale);
    const nn::Var weights = g.softmax_rows(scores);
    result.weights.push_back(weights);
    outputs.push_back(g.matmul(weights, g.slice_cols(v, at, head_width)));
  }
  result.output = output(g, g.concat_cols(outputs));
  return result;
}

TransformerLayer TransformerLayer::create(Initializer& init, const std::string& name, Eigen::Index width,
                                          int heads) {
  return {MultiHeadAttention::create(init, name + ".attention", width, heads),
          LayerNorm::create(init, name + ".attention_norm", width),
          FeedForward::create(init, name + ".feed_forward", width, 2 * width, width),
          LayerNorm::create(init, name + ".output_norm", width)};
}

nn::Var TransformerLayer::operator()(nn::Graph& g, nn::Var x) const {
  const nn::Var attended = attention_norm(g, g.add(x, attention(g, x, x).output));
  return output_norm(g, g.add(attended, feed_forward(g, attended)));
}

nn::Matrix sinusoidal_positions(Eigen::Index length, Eigen::Index width) {
  nn::Matrix table(length, width);
  for (Eigen::Index pos = 0; pos < length; ++pos) {
    for (Eigen::Index i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      table(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return table;
}

}  // namespace spam::model
