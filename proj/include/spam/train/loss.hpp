#pragma once

#include <span>
#include <vector>

#include "spam/core/style_key.hpp"
#include "spam/nn/graph.hpp"

namespace spam::train {

struct LossWeights {
  double lambda_c = 1.0;
  double lambda_p = 0.1;
  double lambda_v = 0.1;
  double lambda_e = 0.1;
  double temperature = 0.07;
  double huber_delta = 1.0;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// Throws UsageError unless lambda_c > 0, the other weights are >= 0 and
/// temperature and delta are positive.
void validate(const LossWeights& w);

/// Utterance-level auxiliary values, in z-scored units. `has_pitch` is false
/// for targets of utterances with no voiced frame.
struct AuxValues {
  double pitch = 0.0;
  double speed = 0.0;
  double energy = 0.0;
  bool has_pitch = true;
};

struct Batch {
  std::vector<nn::RowVector> speech;  ///< a_i, unit norm
  std::vector<nn::RowVector> prompt;  ///< b_i, unit norm
  std::vector<StyleKey> keys;
  std::vector<AuxValues> targets;
  std::vector<AuxValues> predictions;

  std::size_t size() const { return keys.size(); }
};

/// Throws UsageError for N < 2, mismatched lengths or non-unit embeddings.
void validate(const Batch& batch);

/// Gradients of a directional loss with respect to its inputs.
struct DirectionalGradients {
  std::vector<nn::RowVector> anchors;
  std::vector<nn::RowVector> candidates;
};

/// Supervised contrastive loss from anchors X to candidates Y: for each
/// anchor, the mean over same-key candidates of the negative log softmax
/// over all candidates (logits x.y / temperature), averaged over anchors.
double supcon_directional(std::span<const nn::RowVector> anchors, std::span<const nn::RowVector> candidates,
                          std::span<const StyleKey> keys, double temperature,
                          DirectionalGradients* grads = nullptr);

/// Mean of the two directions, speech->prompt and prompt->speech.
double contrastive_loss(const Batch& batch, const LossWeights& weights);

double huber(double pred, double target, double delta);
/// d huber / d pred
double huber_derivative(double pred, double target, double delta);

struct LossBreakdown {
  double total = 0.0;
  double contrastive = 0.0;
  double pitch = 0.0;
  double speed = 0.0;
  double energy = 0.0;
};

struct LossGradients {
  std::vector<nn::RowVector> speech;
  std::vector<nn::RowVector> prompt;
  std::vector<AuxValues> predictions;
};

/// Weighted sum of the contrastive loss and the batch-mean Huber losses of
/// the three auxiliary predictions. The pitch mean runs over items whose
/// target has pitch; it is 0 when none do.
LossBreakdown total_loss(const Batch& batch, const LossWeights& weights, LossGradients* grads = nullptr);

}  // namespace spam::train
