#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spam/core/manifest.hpp"
#include "spam/core/style_key.hpp"
#include "spam/core/waveform.hpp"

namespace spam::datagen {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Acoustic ranges for each attribute level of the synthetic corpus.
struct GenerationSpec {
  std::size_t n_items = 540;
  std::uint64_t seed = 0;
  /// Indexed [gender][pitch level], Hz.
  std::array<std::array<Interval, 3>, 2> f0_ranges_hz{{
      {{{80, 110}, {110, 150}, {150, 200}}},
      {{{150, 200}, {200, 260}, {260, 350}}},
  }};
  /// Indexed by speed level, phonemes per second.
  std::array<Interval, 3> rate_ranges_pps{{{2, 4}, {4, 7}, {7, 11}}};
  /// Sine-equivalent amplitude: a tone's RMS is amplitude / sqrt(2).
  std::array<Interval, 3> amplitude_ranges{{{0.05, 0.1}, {0.15, 0.3}, {0.4, 0.55}}};
  Interval duration_range_s{1.0, 3.0};

  friend bool operator==(const GenerationSpec&, const GenerationSpec&) = default;
};

/// Checks interval ordering, per-attribute disjointness (shared endpoints are
/// allowed), the 60-400 Hz F0 bounds and the 1.0 peak budget.
void validate(const GenerationSpec& spec);

GenerationSpec load_generation_spec(const std::filesystem::path& path);
std::string generation_spec_json(const GenerationSpec& spec);

/// Relative F0 jitter applied independently to each phoneme segment.
inline constexpr double kSegmentJitter = 0.03;
/// Silence closing every phoneme segment; the fraction of silent frames is
/// what makes speaking rate audible to frame-wise models.
inline constexpr double kSegmentGapSeconds = 0.03;
inline constexpr double kRampSeconds = 0.005;

/// Declared ground truth behind one synthesized utterance.
struct UtteranceParams {
  double rate_pps = 0.0;
  double base_f0_hz = 0.0;
  double amplitude = 0.0;
};

/// The parameters synthesize_utterance will draw for this key and seed.
UtteranceParams draw_params(const StyleKey& key, std::uint64_t seed, const GenerationSpec& spec);

/// Harmonic-tone "speech": one voiced segment per phoneme of the transcript.
/// Female voices fall off at 1/k per harmonic, male voices at 1/k^2.
Waveform synthesize_utterance(const StyleKey& key, std::string_view transcript, std::uint64_t seed,
                              const GenerationSpec& spec);

/// Fixed list of 200 transcripts in the phonemizer's alphabet.
const std::vector<std::string>& toy_sentences();

}  // namespace spam::datagen
