#pragma once

#include <array>
#include <vector>

#include "spam/core/rng.hpp"
#include "spam/model/encoders.hpp"
#include "spam/model/layers.hpp"

namespace spam::model {

enum class Branch { global, speed, energy, pitch };
inline constexpr std::array<Branch, 4> kBranches = {Branch::global, Branch::speed, Branch::energy,
                                                    Branch::pitch};
const char* to_string(Branch b);

struct BranchOutputs {
  EmbeddingSequence global;
  EmbeddingSequence speed;
  EmbeddingSequence energy;
  EmbeddingSequence pitch;

  const EmbeddingSequence& operator[](Branch b) const;
};

/// Frame-wise and utterance-level (mean over frames) auxiliary predictions,
/// in z-scored target units.
struct AuxPredictions {
  std::vector<double> speed_frames;
  std::vector<double> energy_frames;
  std::vector<double> pitch_frames;
  double speed = 0.0;
  double energy = 0.0;
  double pitch = 0.0;
};

struct SpeechEmbedding {
  nn::RowVector vector;
  bool normalized = false;
};

/// Dot product of two unit vectors. Throws UsageError when either input is
/// not marked normalized or the widths differ.
double similarity(const SpeechEmbedding& a, const PromptEmbedding& b);

/// Two conv1d (kernel 3, same padding) + GELU + LayerNorm + dropout blocks,
/// then a per-frame linear output.
struct VariancePredictor {
  Linear conv1;
  LayerNorm norm1;
  Linear conv2;
  LayerNorm norm2;
  Linear output;
  double dropout = 0.0;

  static VariancePredictor create(Initializer& init, const std::string& name, Eigen::Index width,
                                  double dropout);
  /// `rng` may be null, which disables dropout.
  nn::Var operator()(nn::Graph& g, nn::Var x, Rng* rng) const;
};

/// The four parallel branches over the fused sequence, the auxiliary heads
/// attached to the speed/energy/pitch branches, and sum-mean pooling.
struct StyleFusion {
  std::array<FeedForward, 4> branches;
  VariancePredictor speed_head;
  FeedForward energy_head;
  FeedForward pitch_head;

  static StyleFusion create(Initializer& init, Eigen::Index width, double dropout);

  struct BranchVars {
    std::array<nn::Var, 4> outputs;
  };
  struct AuxVars {
    nn::Var speed;   ///< T x 1
    nn::Var energy;  ///< T x 1
    nn::Var pitch;   ///< T x 1
  };

  BranchVars branch(nn::Graph& g, nn::Var fused) const;
  AuxVars aux(nn::Graph& g, const BranchVars& b, Rng* rng) const;
  /// Sum of branch outputs, mean over frames, L2 normalized (1 x h).
  nn::Var pool(nn::Graph& g, const BranchVars& b) const;
};

}  // namespace spam::model
