#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spam/core/rng.hpp"
#include "spam/nn/graph.hpp"

namespace spam::model {

/// Registers parameters under a name prefix with reproducible initial values.
class Initializer {
 public:
  Initializer(nn::ParameterStore& store, std::uint64_t seed) : store_(store), rng_(seed) {}

  /// Xavier-uniform weight matrix.
  std::size_t weight(const std::string& name, Eigen::Index in, Eigen::Index out, bool frozen = false);
  std::size_t constant(const std::string& name, Eigen::Index rows, Eigen::Index cols, double value);
  std::size_t normal(const std::string& name, Eigen::Index rows, Eigen::Index cols, double stddev,
                     bool frozen = false);

 private:
  nn::ParameterStore& store_;
  Rng rng_;
};

struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;

  static Linear create(Initializer& init, const std::string& name, Eigen::Index in, Eigen::Index out);
  nn::Var operator()(nn::Graph& g, nn::Var x) const { return g.affine(x, g.param(weight), g.param(bias)); }
};

/// Linear -> GELU -> Linear.
struct FeedForward {
  Linear first;
  Linear second;

  static FeedForward create(Initializer& init, const std::string& name, Eigen::Index in,
                            Eigen::Index hidden, Eigen::Index out);
  nn::Var operator()(nn::Graph& g, nn::Var x) const { return second(g, g.gelu(first(g, x))); }
};

struct LayerNorm {
  std::size_t gain = 0;
  std::size_t bias = 0;

  static LayerNorm create(Initializer& init, const std::string& name, Eigen::Index width);
  nn::Var operator()(nn::Graph& g, nn::Var x) const {
    return g.layer_norm(x, g.param(gain), g.param(bias));
  }
};

/// Scaled dot-product attention with separate query/key/value/output
/// projections, split into equal-width heads. The key projection has no bias.
struct MultiHeadAttention {
  Linear query;
  std::size_t key = 0;
  Linear value;
  Linear output;
  int heads = 1;

  static MultiHeadAttention create(Initializer& init, const std::string& name, Eigen::Index width,
                                   int heads);

  struct Result {
    nn::Var output;
    std::vector<nn::Var> weights;  ///< per head, queries x keys
  };
  Result operator()(nn::Graph& g, nn::Var queries, nn::Var keys_values) const;
};

/// Post-norm transformer encoder layer: self-attention and a 2x-wide
/// feed-forward, each wrapped in a residual connection and layer norm.
struct TransformerLayer {
  MultiHeadAttention attention;
  LayerNorm attention_norm;
  FeedForward feed_forward;
  LayerNorm output_norm;

  static TransformerLayer create(Initializer& init, const std::string& name, Eigen::Index width,
                                 int heads);
  nn::Var operator()(nn::Graph& g, nn::Var x) const;
};

/// Fixed sinusoidal position table, rows = positions.
nn::Matrix sinusoidal_positions(Eigen::Index length, Eigen::Index width);

}  // namespace spam::model
