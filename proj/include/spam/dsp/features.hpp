#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "spam/core/waveform.hpp"

namespace spam::dsp {

// 25 ms windows with a 10 ms hop at 16 kHz. Every frame-level quantity in
// the project (pitch, energy, encoder frames) uses this convention.
inline constexpr int kFrameLength = 400;
inline constexpr int kFrameHop = 160;
inline constexpr int kNumMelBands = 40;
inline constexpr double kEnergyFloor = 1e-5;
inline constexpr double kMinF0Hz = 50.0;
inline constexpr double kMaxF0Hz = 600.0;
inline constexpr double kVoicingThreshold = 0.5;

using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// floor((n - 400) / 160) + 1, and 1 for anything shorter than a window.
int frame_count(std::size_t num_samples);

/// One row per frame; the last window is zero-padded when the signal is
/// shorter than 400 samples.
FrameMatrix frame(const Waveform& wave);

struct PitchTrack {
  std::vector<double> pitch_log_hz;  ///< log F0, 0 where unvoiced
  std::vector<bool> voicing_mask;
};

/// Normalized autocorrelation pitch tracker. Lags span [fs/600, fs/50];
/// a frame is voiced when its best peak reaches 0.5.
PitchTrack extract_pitch(const Waveform& wave);

/// log(max(rms, 1e-5)) per frame.
std::vector<double> extract_energy(const Waveform& wave);

/// 40-band log-mel energies (Hann window, 512-point FFT, 0-8 kHz).
FrameMatrix log_mel_filterbank(const Waveform& wave);

inline constexpr int kPhonemeVocabularySize = 44;

struct PhonemeSequence {
  std::vector<int> phonemes;
  int vocabulary_size = kPhonemeVocabularySize;
};

/// Symbol table for phoneme indices, size 44.
const std::vector<std::string>& phoneme_symbols();

/// Rule-based G2P over lowercase letters, digits, space and apostrophe.
/// Digits are spelled out; spaces and apostrophes emit nothing.
/// Throws DataError naming the first unmappable character and its position.
PhonemeSequence phonemize(std::string_view transcript);

/// Phonemes per second of audio. Throws DataError for transcripts with no
/// phonemes.
double speaking_rate(std::string_view transcript, const Waveform& wave);

/// Supervision targets for one utterance.
struct FrameFeatures {
  std::vector<double> pitch_log_hz;
  std::vector<bool> voicing_mask;
  std::vector<double> energy_log_rms;
  int frame_count = 0;
  double speaking_rate_pps = 0.0;

  /// Mean log F0 over voiced frames; false when nothing is voiced.
  bool mean_voiced_pitch(double& out) const;
  double mean_energy() const;
};

FrameFeatures extract_features(std::string_view transcript, const Waveform& wave);

}  // namespace spam::dsp
