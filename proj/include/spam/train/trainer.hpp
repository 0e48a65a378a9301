#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spam/core/manifest.hpp"
#include "spam/dsp/features.hpp"
#include "spam/model/spam_model.hpp"
#include "spam/train/loss.hpp"

namespace spam::train {

/// Z-score statistics of the auxiliary targets on the training split.
struct AuxNormalizer {
  double pitch_mean = 0.0, pitch_std = 1.0;
  double speed_mean = 0.0, speed_std = 1.0;
  double energy_mean = 0.0, energy_std = 1.0;

  /// Fits means and standard deviations; pitch over voiced utterances only.
  static AuxNormalizer fit(std::span<const dsp::FrameFeatures> features);
  AuxValues normalize(const dsp::FrameFeatures& f) const;
  /// Back to raw units (log Hz, phonemes per second, log RMS).
  AuxValues denormalize(const AuxValues& z) const;

  friend bool operator==(const AuxNormalizer&, const AuxNormalizer&) = default;
};

/// One record with its model inputs and raw auxiliary features.
struct TrainingItem {
  UtteranceRecord record;
  model::SpeechInputs inputs;
  dsp::FrameFeatures features;
};

/// Loads audio and computes inputs and features for the given records.
std::vector<TrainingItem> prepare_items(const Manifest& manifest, std::span<const UtteranceRecord> records);

/// A sampled batch element: index into the record list, plus a replacement
/// prompt when the record was duplicated because its key had one record.
struct SampledItem {
  std::size_t index = 0;
  std::optional<std::string> prompt;
};

/// Draws batch_size/2 style keys with probability proportional to their
/// frequency, then two distinct records of each key.
class BatchSampler {
 public:
  explicit BatchSampler(std::vector<UtteranceRecord> records);

  std::vector<SampledItem> sample(std::size_t batch_size, std::uint64_t seed) const;
  const std::vector<UtteranceRecord>& records() const { return records_; }

 private:
  std::vector<UtteranceRecord> records_;
  std::vector<std::vector<std::size_t>> by_key_;
};

/// Records of one batch, in sampler order, from a manifest's train split.
/// Throws UsageError unless batch_size >= 4 and even.
std::vector<UtteranceRecord> sample_batch(const Manifest& manifest, std::size_t batch_size, std::uint64_t seed);

struct TrainConfig {
  model::ModelConfig model;
  LossWeights loss;
  std::size_t batch_size = 32;
  double learning_rate = 3e-4;
  double weight_decay = 0.01;
  std::size_t warmup_steps = 100;
  std::size_t max_steps = 20000;
  double clip_norm = 1.0;
  std::size_t eval_every = 50;
  std::size_t patience = 10;
  std::size_t dev_batches = 8;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& config);

struct StepMetrics {
  std::size_t step = 0;
  LossBreakdown loss;
  double grad_norm = 0.0;
  std::optional<double> dev_contrastive;  ///< set on evaluation steps
};

struct TrainResult {
  model::SpamModel model;  ///< best-dev parameters
  AuxNormalizer aux;
  TrainConfig config;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  double initial_dev_contrastive = 0.0;
  double best_dev_contrastive = 0.0;
  bool early_stopped = false;
};

/// One element of a training batch.
struct BatchItem {
  const model::SpeechInputs* inputs = nullptr;
  std::vector<int> tokens;
  StyleKey key;
  AuxValues target;
};

/// Forward pass of both towers for every item, the total loss and, when
/// `grads` is given, its gradient accumulated into `grads`. Dropout is
/// active only when `dropout_seed` is set.
LossBreakdown batch_loss(const model::SpamModel& model, std::span<const BatchItem> items,
                         const LossWeights& weights, std::optional<std::uint64_t> dropout_seed,
                         nn::Gradients* grads);

using StepCallback = std::function<void(const StepMetrics&)>;

/// Trains on the manifest's train split with early stopping on the dev
/// split. Throws RuntimeFailure if the loss or gradient becomes non-finite.
TrainResult train(const Manifest& manifest, const TrainConfig& config, const StepCallback& on_step = {});

/// Mean contrastive loss over fixed batches drawn from `items`.
double evaluate_contrastive(const model::SpamModel& model, std::span<const TrainingItem> items,
                            const LossWeights& weights, std::size_t batch_size, std::size_t num_batches,
                            std::uint64_t seed);

}  // namespace spam::train
