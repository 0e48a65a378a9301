#include "spam/model/spam_model.hpp"

#include "spam/core/error.hpp"
#include "spam/dsp/features.hpp"

namespace spam::model {
namespace {

std::vector<double> to_vector(const nn::Matrix& column) {
  return std::vector<double>(column.data(), column.data() + column.size());
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

void validate(const ModelConfig& config) {
  if (config.width <= 0 || config.heads <= 0 || config.prompt_layers <= 0) {
    throw UsageError("model sizes must be positive");
  }
  if (config.width % config.heads != 0) throw UsageError("model width must be divisible by heads");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw UsageError("dropout must be in [0, 1)");
}

SpamModel::SpamModel(const ModelConfig& config, Vocabulary vocabulary)
    : config_(config), vocabulary_(std::move(vocabulary)) {
  validate(config_);
  Initializer init(store_, config_.init_seed);
  const auto h = config_.width;
  waveform_ = std::make_unique<FeedForwardWaveformBackbone>(init, h);
  if (waveform_->hop_samples() != dsp::kFrameHop) throw UsageError("waveform backbone hop mismatch");
  speaker_ = SpeakerEncoder::create(init, h);
  transcript_ = TranscriptEmbedding::create(init, h);
  cross_ = SpeechFusion::create(init, h, config_.heads);
  fusion_ = StyleFusion::create(init, h, config_.dropout);
  text_ = std::make_unique<TransformerTextBackbone>(init, vocabulary_.size(), h, config_.heads,
                                                    config_.prompt_layers);
  prompt_adapter_ = FeedForward::create(init, "prompt.adapter", h, h, h);
}

SpamModel::SpamModel(const SpamModel& other)
    : config_(other.config_),
      vocabulary_(other.vocabulary_),
      store_(other.store_),
      waveform_(other.waveform_->clone()),
      speaker_(other.speaker_),
      transcript_(other.transcript_),
      cross_(other.cross_),
      fusion_(other.fusion_),
      text_(other.text_->clone()),
      prompt_adapter_(other.prompt_adapter_) {}

SpamModel& SpamModel::operator=(const SpamModel& other) {
  if (this != &other) *this = SpamModel(other);
  return *this;
}

SpamModel::SpeechVars SpamModel::speech_graph(nn::Graph& g, const SpeechInputs& inputs,
                                              Rng* dropout_rng) const {
  SpeechVars v;
  v.frames = waveform_->encode(g, inputs);
  v.speaker = speaker_(g, inputs);
  v.transcript = transcript_(g, inputs.phonemes);
  auto fused = cross_(g, v.frames, v.speaker, v.transcript);
  v.fused = fused.output;
  v.attention = std::move(fused.weights);
  v.branches = fusion_.branch(g, v.fused);
  v.aux = fusion_.aux(g, v.branches, dropout_rng);
  v.embedding = fusion_.pool(g, v.branches);
  return v;
}

nn::Var SpamModel::prompt_graph(nn::Graph& g, std::span<const int> tokens) const {
  return g.l2_normalize(prompt_adapter_(g, text_->encode(g, tokens)));
}

EmbeddingSequence SpamModel::encode_waveform(const Waveform& wave) const {
  nn::Graph g(store_);
  return {g.value(waveform_->encode(g, prepare_speech(wave, "")))};
}

SpeakerEmbedding SpamModel::encode_speaker(const Waveform& wave) const {
  nn::Graph g(store_);
  return {g.value(speaker_(g, prepare_speech(wave, "")))};
}

EmbeddingSequence SpamModel::embed_transcript(std::string_view transcript) const {
  const auto phonemes = dsp::phonemize(transcript).phonemes;
  if (phonemes.empty()) return {nn::Matrix(0, config_.width)};
  nn::Graph g(store_);
  return {g.value(transcript_(g, phonemes))};
}

EmbeddingSequence SpamModel::fuse_speech(const EmbeddingSequence& w, const SpeakerEmbedding& s,
                                         const EmbeddingSequence& c) const {
  nn::Graph g(store_);
  const nn::Var keys = c.length() == 0 ? g.param(transcript_.blank) : g.constant(c.vectors);
  return {g.value(cross_(g, g.constant(w.vectors), g.constant(s.vector), keys).output)};
}

std::vector<nn::Matrix> SpamModel::attention_weights(const EmbeddingSequence& w, const SpeakerEmbedding& s,
                                                     const EmbeddingSequence& c) const {
  nn::Graph g(store_);
  const nn::Var keys = c.length() == 0 ? g.param(transcript_.blank) : g.constant(c.vectors);
  const auto result = cross_(g, g.constant(w.vectors), g.constant(s.vector), keys);
  std::vector<nn::Matrix> out;
  for (auto v : result.weights) out.push_back(g.value(v));
  return out;
}

PromptEmbedding SpamModel::encode_prompt(std::string_view prompt) const {
  const auto tokens = vocabulary_.encode(prompt);
  if (tokens.empty()) throw UsageError("prompt is empty");
  nn::Graph g(store_);
  return {g.value(prompt_graph(g, tokens)), true};
}

BranchOutputs SpamModel::run_branches(const EmbeddingSequence& a_hat) const {
  if (a_hat.length() == 0) throw UsageError("run_branches needs at least one frame");
  nn::Graph g(store_);
  const auto b = fusion_.branch(g, g.constant(a_hat.vectors));
  return {{g.value(b.outputs[0])}, {g.value(b.outputs[1])}, {g.value(b.outputs[2])}, {g.value(b.outputs[3])}};
}

namespace {

StyleFusion::BranchVars constants(nn::Graph& g, const BranchOutputs& b) {
  return {{g.constant(b.global.vectors), g.constant(b.speed.vectors), g.constant(b.energy.vectors),
           g.constant(b.pitch.vectors)}};
}

}  // namespace

AuxPredictions SpamModel::predict_aux(const BranchOutputs& branches) const {
  nn::Graph g(store_);
  const auto aux = fusion_.aux(g, constants(g, branches), nullptr);
  AuxPredictions p;
  p.speed_frames = to_vector(g.value(aux.speed));
  p.energy_frames = to_vector(g.value(aux.energy));
  p.pitch_frames = to_vector(g.value(aux.pitch));
  p.speed = mean_of(p.speed_frames);
  p.energy = mean_of(p.energy_frames);
  p.pitch = mean_of(p.pitch_frames);
  return p;
}

SpeechEmbedding SpamModel::pool(const BranchOutputs& branches) const {
  nn::Graph g(store_);
  return {g.value(fusion_.pool(g, constants(g, branches))), true};
}

SpeechEmbedding SpamModel::encode_speech(const SpeechInputs& inputs) const {
  nn::Graph g(store_);
  return {g.value(speech_graph(g, inputs).embedding), true};
}

SpeechEmbedding SpamModel::encode_speech(const Waveform& wave, std::string_view transcript) const {
  return encode_speech(prepare_speech(wave, transcript));
}

double SpamModel::score(const Waveform& wave, std::string_view transcript, std::string_view prompt) const {
  return similarity(encode_speech(wave, transcript), encode_prompt(prompt));
}

std::vector<std::size_t> SpamModel::parameters_with_prefix(std::string_view prefix) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < store_.size(); ++i) {
    if (std::string_view(store_[i].name).starts_with(prefix)) out.push_back(i);
  }
  return out;
}

}  // namespace spam::model
