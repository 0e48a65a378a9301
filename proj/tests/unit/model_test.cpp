#include "spam/model/spam_model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "spam/core/error.hpp"
#include "spam/core/rng.hpp"
#include "spam/datagen/generation.hpp"
#include "spam/datagen/prompts.hpp"
#include "spam/dsp/features.hpp"

namespace spam::model {
namespace {

using nn::Matrix;

SpamModel small_model(std::uint64_t seed = 3) {
  ModelConfig config;
  config.init_seed = seed;
  return SpamModel(config, Vocabulary::build({}));
}

Waveform sine(double hz, double seconds, double amplitude = 0.5) {
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(seconds * kSampleRateHz));
  for (std::size_t n = 0; n < w.samples.size(); ++n) {
    w.samples[n] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(n) / kSampleRateHz);
  }
  return w;
}

Waveform utterance(const StyleKey& key, std::uint64_t seed) {
  return datagen::synthesize_utterance(key, "the cat sat", seed, datagen::GenerationSpec{});
}

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

TEST(Encoders, WaveformLengthMatchesFrameCount) {
  const auto model = small_model();
  const auto w = model.encode_waveform(sine(220, 1.0));
  EXPECT_EQ(w.length(), 98);
  EXPECT_EQ(w.width(), 64);
  for (double seconds : {0.05, 0.5, 1.7}) {
    const auto wave = sine(150, seconds);
    EXPECT_EQ(model.encode_waveform(wave).length(), dsp::frame_count(wave.samples.size()));
  }
}

TEST(Encoders, WaveformNonDegenerateAndDeterministic) {
  const auto model = small_model();
  Waveform silence;
  silence.samples.assign(16000, 0.0);
  const auto a = model.encode_waveform(silence);
  const auto b = model.encode_waveform(sine(220, 1.0));
  EXPECT_GT((a.vectors - b.vectors).cwiseAbs().mean(), 0.0);
  EXPECT_EQ(model.encode_waveform(sine(220, 1.0)).vectors, b.vectors);
  EXPECT_TRUE(b.vectors.allFinite());
}

TEST(Encoders, SpeakerDeterministic) {
  const auto model = small_model();
  const auto wave = utterance({Gender::female, Level::high, Speed::normal, Level::low}, 1);
  const auto s1 = model.encode_speaker(wave);
  EXPECT_EQ(s1.vector.size(), 64);
  EXPECT_EQ(model.encode_speaker(wave).vector, s1.vector);
}

TEST(Encoders, TranscriptLookup) {
  const auto model = small_model();
  const auto c = model.embed_transcript("aa");
  ASSERT_EQ(c.length(), 2);
  EXPECT_EQ(c.vectors.row(0), c.vectors.row(1));
  EXPECT_EQ(model.embed_transcript("").length(), 0);
  EXPECT_EQ(model.embed_transcript("  ").length(), 0);
  EXPECT_THROW(model.embed_transcript("Hello"), DataError);

  const auto& table = model.parameters()[model.parameters().index_of("speech.transcript.table")].value;
  ASSERT_EQ(table.rows(), dsp::kPhonemeVocabularySize);
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < table.rows(); ++j) EXPECT_NE(table.row(i), table.row(j));
  }
}

TEST(Encoders, FuseSpeechShapesAndAttentionRows) {
  const auto model = small_model();
  Rng rng(5);
  const EmbeddingSequence w{random_matrix(rng, 17, 64)};
  const SpeakerEmbedding s{random_matrix(rng, 1, 64)};
  const EmbeddingSequence c{random_matrix(rng, 9, 64)};
  EXPECT_EQ(model.fuse_speech(w, s, c).length(), 17);
  const auto weights = model.attention_weights(w, s, c);
  ASSERT_EQ(weights.size(), 4u);
  for (const auto& head : weights) {
    ASSERT_EQ(head.rows(), 17);
    ASSERT_EQ(head.cols(), 9);
    for (Eigen::Index t = 0; t < head.rows(); ++t) EXPECT_NEAR(head.row(t).sum(), 1.0, 1e-6);
  }
}

TEST(Encoders, SingleKeyGetsAllAttention) {
  const auto model = small_model();
  Rng rng(6);
  const EmbeddingSequence w{random_matrix(rng, 5, 64)};
  const SpeakerEmbedding s{random_matrix(rng, 1, 64)};
  const EmbeddingSequence c{random_matrix(rng, 1, 64)};
  for (const auto& head : model.attention_weights(w, s, c)) {
    for (Eigen::Index t = 0; t < head.rows(); ++t) EXPECT_EQ(head(t, 0), 1.0);
  }
}

TEST(Encoders, UniformKeysArePermutationInvariant) {
  const auto model = small_model();
  Rng rng(7);
  const EmbeddingSequence w{random_matrix(rng, 6, 64)};
  const SpeakerEmbedding s{random_matrix(rng, 1, 64)};
  const Matrix row = random_matrix(rng, 1, 64);
  EmbeddingSequence c{row.replicate(4, 1)};
  const auto before = model.fuse_speech(w, s, c);
  c.vectors.row(0).swap(c.vectors.row(3));
  EXPECT_EQ(model.fuse_speech(w, s, c).vectors, before.vectors);
}

TEST(Encoders, EmptyTranscriptUsesBlank) {
  const auto model = small_model();
  Rng rng(8);
  const EmbeddingSequence w{random_matrix(rng, 4, 64)};
  const SpeakerEmbedding s{random_matrix(rng, 1, 64)};
  const auto& blank = model.parameters()[model.parameters().index_of("speech.transcript.blank")].value;
  const auto fused_empty = model.fuse_speech(w, s, EmbeddingSequence{Matrix(0, 64)});
  const auto fused_blank = model.fuse_speech(w, s, EmbeddingSequence{blank});
  EXPECT_EQ(fused_empty.vectors, fused_blank.vectors);
}

TEST(Encoders, FuseSpeechRejectsBadInputs) {
  const auto model = small_model();
  Rng rng(9);
  const SpeakerEmbedding s{random_matrix(rng, 1, 64)};
  EXPECT_THROW(model.fuse_speech(EmbeddingSequence{random_matrix(rng, 3, 32)}, s,
                                 EmbeddingSequence{random_matrix(rng, 2, 64)}),
               UsageError);
  EXPECT_THROW(model.fuse_speech(EmbeddingSequence{Matrix(0, 64)}, s, EmbeddingSequence{random_matrix(rng, 2, 64)}),
               UsageError);
}

TEST(Encoders, PromptNormalizedAndDeterministic) {
  const auto model = small_model();
  for (const auto& p : {"A man speaks with high pitch, slow speed and loud delivery.", "zebra quokka",
                        "female"}) {
    const auto b = model.encode_prompt(p);
    EXPECT_TRUE(b.normalized);
    EXPECT_NEAR(b.vector.norm(), 1.0, 1e-6);
    EXPECT_EQ(model.encode_prompt(p).vector, b.vector);
  }
  EXPECT_THROW(model.encode_prompt(""), UsageError);
  EXPECT_THROW(model.encode_prompt(" ,. "), UsageError);
}

TEST(Vocabulary, UnknownWordsMapToZero) {
  const auto vocab = Vocabulary::build(std::vector<std::string>{"Quokka speaks"});
  const auto ids = vocab.encode("quokka zebra MAN");
  ASSERT_EQ(ids.size(), 3u);
  EXPECT_NE(ids[0], Vocabulary::kUnknown);
  EXPECT_EQ(ids[1], Vocabulary::kUnknown);
  EXPECT_NE(ids[2], Vocabulary::kUnknown);
  for (const auto& w : datagen::prompt_lexicon()) EXPECT_NE(vocab.encode(w)[0], Vocabulary::kUnknown) << w;
  EXPECT_EQ(vocab.words()[0], "<unk>");
}

TEST(Fusion, ZeroInputGivesConstantBiasPattern) {
  const auto model = small_model();
  const auto out = model.run_branches(EmbeddingSequence{Matrix::Zero(5, 64)});
  for (Branch b : kBranches) {
    ASSERT_EQ(out[b].length(), 5);
    for (Eigen::Index t = 1; t < 5; ++t) EXPECT_EQ(out[b].vectors.row(t), out[b].vectors.row(0));
  }
  EXPECT_THROW(model.run_branches(EmbeddingSequence{Matrix(0, 64)}), UsageError);
}

TEST(Fusion, BranchParametersAreIsolated) {
  auto model = small_model();
  Rng rng(10);
  const EmbeddingSequence a{random_matrix(rng, 7, 64)};
  const auto before = model.run_branches(a);
  for (auto i : model.parameters_with_prefix("fusion.branch.pitch")) {
    model.parameters()[i].value.array() += 0.25;
  }
  const auto after = model.run_branches(a);
  EXPECT_EQ(after.global.vectors, before.global.vectors);
  EXPECT_EQ(after.speed.vectors, before.speed.vectors);
  EXPECT_EQ(after.energy.vectors, before.energy.vectors);
  EXPECT_NE(after.pitch.vectors, before.pitch.vectors);
}

TEST(Fusion, AuxConstantInputAndMeanContract) {
  const auto model = small_model();
  const auto constant = model.run_branches(EmbeddingSequence{Matrix::Zero(6, 64)});
  const auto aux = model.predict_aux(constant);
  for (double v : aux.energy_frames) EXPECT_EQ(v, aux.energy_frames[0]);
  for (double v : aux.pitch_frames) EXPECT_EQ(v, aux.pitch_frames[0]);
  EXPECT_NEAR(aux.energy, aux.energy_frames[0], 1e-15);
  // The convolutional speed head sees zero padding at the edges, so only
  // interior frames are constant.
  for (std::size_t t = 2; t + 2 < aux.speed_frames.size(); ++t) {
    EXPECT_NEAR(aux.speed_frames[t], aux.speed_frames[2], 1e-12);
  }

  Rng rng(11);
  const auto random = model.run_branches(EmbeddingSequence{random_matrix(rng, 13, 64)});
  const auto p = model.predict_aux(random);
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  ASSERT_EQ(p.speed_frames.size(), 13u);
  EXPECT_EQ(p.speed, mean(p.speed_frames));
  EXPECT_EQ(p.energy, mean(p.energy_frames));
  EXPECT_EQ(p.pitch, mean(p.pitch_frames));
}

TEST(Fusion, PoolLaws) {
  const auto model = small_model();
  Rng rng(12);
  const auto one = model.run_branches(EmbeddingSequence{random_matrix(rng, 1, 64)});
  const nn::RowVector sum = one.global.vectors + one.speed.vectors + one.energy.vectors + one.pitch.vectors;
  const auto a1 = model.pool(one);
  EXPECT_TRUE(a1.normalized);
  EXPECT_LT((a1.vector - sum / sum.norm()).cwiseAbs().maxCoeff(), 1e-12);

  const Matrix frames = random_matrix(rng, 9, 64);
  const auto a = model.pool(model.run_branches(EmbeddingSequence{frames}));
  EXPECT_NEAR(a.vector.norm(), 1.0, 1e-6);
  Matrix doubled(18, 64);
  doubled << frames, frames;
  const auto a2 = model.pool(model.run_branches(EmbeddingSequence{doubled}));
  EXPECT_LT((a2.vector - a.vector).cwiseAbs().maxCoeff(), 1e-12);

  Matrix permuted = frames;
  permuted.row(0).swap(permuted.row(8));
  permuted.row(2).swap(permuted.row(5));
  const auto a3 = model.pool(model.run_branches(EmbeddingSequence{permuted}));
  EXPECT_LT((a3.vector - a.vector).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fusion, SimilarityLaws) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    nn::RowVector x = random_matrix(rng, 1, 64), y = random_matrix(rng, 1, 64);
    x /= x.norm();
    y /= y.norm();
    double oracle = 0.0;
    for (int i = 0; i < 64; ++i) oracle += x[i] * y[i];
    const double s = similarity(SpeechEmbedding{x, true}, PromptEmbedding{y, true});
    EXPECT_NEAR(s, oracle, 1e-9);
    EXPECT_LE(std::abs(s), 1.0 + 1e-12);
    EXPECT_NEAR(similarity(SpeechEmbedding{x, true}, PromptEmbedding{x, true}), 1.0, 1e-12);
    EXPECT_NEAR(similarity(SpeechEmbedding{x, true}, PromptEmbedding{-x, true}), -1.0, 1e-12);
  }
  nn::RowVector v = nn::RowVector::Ones(64);
  EXPECT_THROW(similarity(SpeechEmbedding{v, false}, PromptEmbedding{v, true}), UsageError);
  EXPECT_THROW(similarity(SpeechEmbedding{v, true}, PromptEmbedding{v, false}), UsageError);
}

TEST(Fusion, AuxHeadsDoNotAffectScore) {
  auto model = small_model();
  const auto wave = utterance({Gender::male, Level::low, Speed::fast, Level::high}, 2);
  const std::string prompt = "A man speaks with low pitch, fast speed and loud delivery.";
  const double before = model.score(wave, "the cat sat", prompt);
  for (const char* head : {"fusion.speed_head", "fusion.energy_head", "fusion.pitch_head"}) {
    for (auto i : model.parameters_with_prefix(head)) model.parameters()[i].value.setZero();
  }
  EXPECT_EQ(model.score(wave, "the cat sat", prompt), before);
  for (auto i : model.parameters_with_prefix("fusion.branch.global")) {
    model.parameters()[i].value.array() += 0.1;
  }
  EXPECT_NE(model.score(wave, "the cat sat", prompt), before);
}

TEST(Model, GradientReachesEveryTrainableParameter) {
  const auto model = small_model();
  nn::Gradients grads(model.parameters());
  Rng rng(14);
  const auto run = [&](const SpeechInputs& in, std::string_view prompt) {
    nn::Graph g(model.parameters(), &grads);
    Rng dropout(1);
    const auto v = model.speech_graph(g, in, &dropout);
    const auto b = model.prompt_graph(g, model.vocabulary().encode(prompt));
    g.seed(v.embedding, random_matrix(rng, 1, 64));
    g.seed(b, random_matrix(rng, 1, 64));
    for (auto head : {v.aux.speed, v.aux.energy, v.aux.pitch}) {
      g.seed(head, random_matrix(rng, g.value(head).rows(), 1));
    }
    g.backward();
  };
  run(prepare_speech(utterance({Gender::female, Level::normal, Speed::slow, Level::high}, 3), "the cat sat"),
      "A lady talks with high register.");
  run(prepare_speech(utterance({Gender::male, Level::high, Speed::normal, Level::low}, 4), ""),
      "A gentleman speaks slowly.");
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    const auto& p = model.parameters()[i];
    if (p.frozen) {
      EXPECT_EQ(grads[i].cwiseAbs().maxCoeff(), 0.0) << p.name;
    } else {
      EXPECT_GT(grads[i].cwiseAbs().maxCoeff(), 0.0) << p.name;
    }
  }
}

TEST(Model, FrozenSpeakerProjectionExists) {
  const auto model = small_model();
  const auto frozen = model.parameters_with_prefix("speech.speaker.frozen");
  ASSERT_EQ(frozen.size(), 2u);
  for (auto i : frozen) EXPECT_TRUE(model.parameters()[i].frozen);
}

TEST(Model, SameSeedSameParametersAndCopiesAreIndependent) {
  const auto a = small_model(21);
  const auto b = small_model(21);
  const auto c = small_model(22);
  ASSERT_EQ(a.parameters().size(), b.parameters().size());
  bool differs = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value);
    differs |= a.parameters()[i].value != c.parameters()[i].value;
  }
  EXPECT_TRUE(differs);

  auto copy = a;
  copy.parameters()[0].value.setZero();
  EXPECT_NE(copy.parameters()[0].value, a.parameters()[0].value);
  const auto wave = sine(200, 0.5);
  EXPECT_NE(copy.encode_waveform(wave).vectors, a.encode_waveform(wave).vectors);
}

TEST(Model, ConfigValidation) {
  ModelConfig config;
  config.width = 30;
  EXPECT_THROW(SpamModel(config, Vocabulary{}), UsageError);
  config = {};
  config.dropout = 1.0;
  EXPECT_THROW(SpamModel(config, Vocabulary{}), UsageError);
}

}  // namespace
}  // namespace spam::model
