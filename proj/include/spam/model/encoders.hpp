#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spam/core/waveform.hpp"
#include "spam/model/layers.hpp"
#include "spam/nn/graph.hpp"

namespace spam::model {

/// Frame- or token-level vectors, one row each, all of the same width.
struct EmbeddingSequence {
  nn::Matrix vectors;

  Eigen::Index length() const { return vectors.rows(); }
  Eigen::Index width() const { return vectors.cols(); }
};

struct SpeakerEmbedding {
  nn::RowVector vector;
};

struct PromptEmbedding {
  nn::RowVector vector;
  bool normalized = false;
};

/// Everything the speech tower reads from one utterance. Computing this once
/// per item lets training reuse it across steps.
struct SpeechInputs {
  nn::Matrix filterbank;        ///< T x 40, scaled log-mel
  nn::RowVector speaker_stats;  ///< 1 x 80, mean and std of the filterbank
  std::vector<int> phonemes;
};

SpeechInputs prepare_speech(const Waveform& wave, std::string_view transcript);

/// Waveform encoder plug point. Implementations must produce one row per
/// 10 ms frame of the shared framing convention.
class WaveformBackbone {
 public:
  virtual ~WaveformBackbone() = default;
  virtual Eigen::Index width() const = 0;
  virtual int hop_samples() const = 0;
  virtual nn::Var encode(nn::Graph& g, const SpeechInputs& inputs) const = 0;
  virtual std::unique_ptr<WaveformBackbone> clone() const = 0;
};

/// Text encoder plug point: token ids to one pooled 1 x width row.
class TextBackbone {
 public:
  virtual ~TextBackbone() = default;
  virtual Eigen::Index width() const = 0;
  virtual nn::Var encode(nn::Graph& g, std::span<const int> tokens) const = 0;
  virtual std::unique_ptr<TextBackbone> clone() const = 0;
};

/// Filterbank frames through a two-layer feed-forward network.
class FeedForwardWaveformBackbone final : public WaveformBackbone {
 public:
  FeedForwardWaveformBackbone(Initializer& init, Eigen::Index width);
  Eigen::Index width() const override { return width_; }
  int hop_samples() const override;
  nn::Var encode(nn::Graph& g, const SpeechInputs& inputs) const override;
  std::unique_ptr<WaveformBackbone> clone() const override {
    return std::make_unique<FeedForwardWaveformBackbone>(*this);
  }

 private:
  FeedForward net_;
  Eigen::Index width_;
};

/// Token embeddings plus sinusoidal positions through a small transformer
/// encoder, mean-pooled over tokens.
class TransformerTextBackbone final : public TextBackbone {
 public:
  TransformerTextBackbone(Initializer& init, std::size_t vocabulary_size, Eigen::Index width, int heads,
                          int layers);
  Eigen::Index width() const override { return width_; }
  nn::Var encode(nn::Graph& g, std::span<const int> tokens) const override;
  std::unique_ptr<TextBackbone> clone() const override {
    return std::make_unique<TransformerTextBackbone>(*this);
  }

 private:
  std::size_t embeddings_;
  std::vector<TransformerLayer> layers_;
  Eigen::Index width_;
};

/// Frozen random projection of utterance statistics (standing in for a
/// pretrained speaker network) followed by a trainable adapter.
struct SpeakerEncoder {
  Linear frozen_projection;
  FeedForward adapter;

  static SpeakerEncoder create(Initializer& init, Eigen::Index width);
  nn::Var operator()(nn::Graph& g, const SpeechInputs& inputs) const;
};

/// Phoneme lookup table; an empty transcript maps to one learned blank row.
struct TranscriptEmbedding {
  std::size_t table = 0;
  std::size_t blank = 0;

  static TranscriptEmbedding create(Initializer& init, Eigen::Index width);
  nn::Var operator()(nn::Graph& g, std::span<const int> phonemes) const;
};

/// Cross-attention from frames (w_t + s) to transcript embeddings, with a
/// residual connection and layer norm.
struct SpeechFusion {
  MultiHeadAttention attention;
  LayerNorm norm;

  static SpeechFusion create(Initializer& init, Eigen::Index width, int heads);
  MultiHeadAttention::Result operator()(nn::Graph& g, nn::Var frames, nn::Var speaker,
                                        nn::Var transcript) const;
};

/// Word-level tokenizer. Id 0 is the unknown token.
class Vocabulary {
 public:
  static constexpr int kUnknown = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> words);

  /// Lexicon of the prompt templates plus every word of the given prompts.
  static Vocabulary build(std::span<const std::string> prompts);

  std::vector<int> encode(std::string_view prompt) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace spam::model
