#pragma once

#include <cstdint>
#include <memory>
#include <string_view>

#include "spam/model/encoders.hpp"
#include "spam/model/fusion.hpp"

namespace spam::model {

struct ModelConfig {
  Eigen::Index width = 64;
  int heads = 4;
  int prompt_layers = 2;
  double dropout = 0.1;
  std::uint64_t init_seed = 0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws UsageError for non-positive sizes, width not divisible by heads or
/// dropout outside [0, 1).
void validate(const ModelConfig& config);

/// The complete scorer: speech tower (waveform backbone, speaker encoder,
/// transcript table, cross-attention, branches and aux heads) and prompt
/// tower (text backbone and adapter), with one shared parameter store.
class SpamModel {
 public:
  SpamModel(const ModelConfig& config, Vocabulary vocabulary);
  SpamModel(const SpamModel& other);
  SpamModel& operator=(const SpamModel& other);
  SpamModel(SpamModel&&) noexcept = default;
  SpamModel& operator=(SpamModel&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  /// Speech tower as graph nodes.
  struct SpeechVars {
    nn::Var frames;
    nn::Var speaker;
    nn::Var transcript;
    nn::Var fused;
    std::vector<nn::Var> attention;
    StyleFusion::BranchVars branches;
    StyleFusion::AuxVars aux;
    nn::Var embedding;
  };
  /// `dropout_rng` non-null selects training mode.
  SpeechVars speech_graph(nn::Graph& g, const SpeechInputs& inputs, Rng* dropout_rng = nullptr) const;
  /// Prompt tower as a graph node (1 x h, unit norm).
  nn::Var prompt_graph(nn::Graph& g, std::span<const int> tokens) const;

  EmbeddingSequence encode_waveform(const Waveform& wave) const;
  SpeakerEmbedding encode_speaker(const Waveform& wave) const;
  EmbeddingSequence embed_transcript(std::string_view transcript) const;
  EmbeddingSequence fuse_speech(const EmbeddingSequence& w, const SpeakerEmbedding& s,
                                const EmbeddingSequence& c) const;
  /// Per-head attention weights (frames x keys) of the same computation.
  std::vector<nn::Matrix> attention_weights(const EmbeddingSequence& w, const SpeakerEmbedding& s,
                                            const EmbeddingSequence& c) const;
  PromptEmbedding encode_prompt(std::string_view prompt) const;
  BranchOutputs run_branches(const EmbeddingSequence& a_hat) const;
  AuxPredictions predict_aux(const BranchOutputs& branches) const;
  SpeechEmbedding pool(const BranchOutputs& branches) const;

  SpeechEmbedding encode_speech(const SpeechInputs& inputs) const;
  SpeechEmbedding encode_speech(const Waveform& wave, std::string_view transcript) const;
  double score(const Waveform& wave, std::string_view transcript, std::string_view prompt) const;

  /// Indices of every parameter whose name starts with `prefix`.
  std::vector<std::size_t> parameters_with_prefix(std::string_view prefix) const;

 private:
  ModelConfig config_;
  Vocabulary vocabulary_;
  nn::ParameterStore store_;
  std::unique_ptr<WaveformBackbone> waveform_;
  SpeakerEncoder speaker_;
  TranscriptEmbedding transcript_;
  SpeechFusion cross_;
  StyleFusion fusion_;
  std::unique_ptr<TextBackbone> text_;
  FeedForward prompt_adapter_;
};

}  // namespace spam::model
