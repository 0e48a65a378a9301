#include "spam/model/encoders.hpp"

#include <algorithm>
#include <set>

#include "spam/core/error.hpp"
#include "spam/datagen/prompts.hpp"
#include "spam/dsp/features.hpp"

namespace spam::model {
namespace {

// Fixed affine scaling that brings log-mel values (floor log 1e-10) to
// roughly unit range.
constexpr double kFilterbankOffset = 8.0;
constexpr double kFilterbankScale = 6.0;

}  // namespace

SpeechInputs prepare_speech(const Waveform& wave, std::string_view transcript) {
  validate(wave);
  SpeechInputs in;
  in.filterbank = (dsp::log_mel_filterbank(wave).array() + kFilterbankOffset) / kFilterbankScale;
  const nn::RowVector mean = in.filterbank.colwise().mean();
  const nn::RowVector sd =
      ((in.filterbank.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  in.speaker_stats.resize(2 * dsp::kNumMelBands);
  in.speaker_stats << mean, sd;
  in.phonemes = dsp::phonemize(transcript).phonemes;
  return in;
}

FeedForwardWaveformBackbone::FeedForwardWaveformBackbone(Initializer& init, Eigen::Index width)
    : net_(FeedForward::create(init, "speech.waveform", dsp::kNumMelBands, width, width)), width_(width) {}

int FeedForwardWaveformBackbone::hop_samples() const { return dsp::kFrameHop; }

nn::Var FeedForwardWaveformBackbone::encode(nn::Graph& g, const SpeechInputs& inputs) const {
  return net_(g, g.constant(inputs.filterbank));
}

TransformerTextBackbone::TransformerTextBackbone(Initializer& init, std::size_t vocabulary_size,
                                                 Eigen::Index width, int heads, int layers)
    : embeddings_(init.normal("prompt.embeddings", static_cast<Eigen::Index>(vocabulary_size), width, 1.0)),
      width_(width) {
  for (int l = 0; l < layers; ++l) {
    layers_.push_back(TransformerLayer::create(init, "prompt.layer" + std::to_string(l), width, heads));
  }
}

nn::Var TransformerTextBackbone::encode(nn::Graph& g, std::span<const int> tokens) const {
  if (tokens.empty()) throw UsageError("cannot encode an empty prompt");
  nn::Var x = g.gather_rows(g.param(embeddings_), tokens);
  x = g.add(x, g.constant(sinusoidal_positions(static_cast<Eigen::Index>(tokens.size()), width_)));
  for (const auto& layer : layers_) x = layer(g, x);
  return g.mean_rows(x);
}

SpeakerEncoder SpeakerEncoder::create(Initializer& init, Eigen::Index width) {
  SpeakerEncoder enc;
  const Eigen::Index in = 2 * dsp::kNumMelBands;
  enc.frozen_projection = {init.normal("speech.speaker.frozen.weight", in, width,
                                       1.0 / std::sqrt(static_cast<double>(in)), /*frozen=*/true),
                           init.normal("speech.speaker.frozen.bias", 1, width, 0.1, /*frozen=*/true)};
  enc.adapter = FeedForward::create(init, "speech.speaker.adapter", width, width, width);
  return enc;
}

nn::Var SpeakerEncoder::operator()(nn::Graph& g, const SpeechInputs& inputs) const {
  const nn::Var stats = g.constant(inputs.speaker_stats);
  return adapter(g, g.tanh(frozen_projection(g, stats)));
}

TranscriptEmbedding TranscriptEmbedding::create(Initializer& init, Eigen::Index width) {
  return {init.normal("speech.transcript.table", dsp::kPhonemeVocabularySize, width, 1.0),
          init.normal("speech.transcript.blank", 1, width, 1.0)};
}

nn::Var TranscriptEmbedding::operator()(nn::Graph& g, std::span<const int> phonemes) const {
  if (phonemes.empty()) return g.param(blank);
  return g.gather_rows(g.param(table), phonemes);
}

SpeechFusion SpeechFusion::create(Initializer& init, Eigen::Index width, int heads) {
  return {MultiHeadAttention::create(init, "speech.cross_attention", width, heads),
          LayerNorm::create(init, "speech.cross_attention_norm", width)};
}

MultiHeadAttention::Result SpeechFusion::operator()(nn::Graph& g, nn::Var frames, nn::Var speaker,
                                                    nn::Var transcript) const {
  if (g.value(frames).rows() == 0) throw UsageError("fuse_speech needs at least one frame");
  if (g.value(frames).cols() != g.value(speaker).cols() ||
      g.value(frames).cols() != g.value(transcript).cols()) {
    throw UsageError("fuse_speech width mismatch");
  }
  const nn::Var queries = g.add_row(frames, speaker);
  auto result = attention(g, queries, transcript);
  result.output = norm(g, g.add(queries, result.output));
  return result;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> words) {
  words_.push_back(std::string(kUnknownToken));
  for (auto& w : words) {
    if (w == kUnknownToken) continue;
    if (ids_.count(w)) throw DataError("duplicate vocabulary word '" + w + "'");
    ids_.emplace(w, static_cast<int>(words_.size()));
    words_.push_back(std::move(w));
  }
  ids_.emplace(std::string(kUnknownToken), kUnknown);
}

Vocabulary Vocabulary::build(std::span<const std::string> prompts) {
  std::set<std::string> words;
  for (auto& w : datagen::prompt_lexicon()) words.insert(w);
  for (const auto& p : prompts) {
    for (auto& w : datagen::tokenize_prompt(p)) words.insert(w);
  }
  words.erase(std::string(kUnknownToken));
  return Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

std::vector<int> Vocabulary::encode(std::string_view prompt) const {
  std::vector<int> ids;
  for (const auto& w : datagen::tokenize_prompt(prompt)) {
    const auto it = ids_.find(w);
    ids.push_back(it == ids_.end() ? kUnknown : it->second);
  }
  return ids;
}

}  // namespace spam::model
