#pragma once

#include <filesystem>
#include <vector>

namespace spam {

inline constexpr int kSampleRateHz = 16000;

/// Mono audio at 16 kHz, samples in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kSampleRateHz;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
  }
};

/// Throws DataError if the rate is not 16 kHz, the waveform is empty, or a
/// sample is outside [-1, 1] or non-finite.
void validate(const Waveform& wave);

/// RIFF/WAVE, PCM 16-bit, mono. Samples are quantized as round(x * 32768)
/// clamped to the int16 range; reading divides by 32768.
void write_wav(const Waveform& wave, const std::filesystem::path& path);
Waveform read_wav(const std::filesystem::path& path);

/// Applies the same quantization write_wav/read_wav would.
Waveform quantize_pcm16(const Waveform& wave);

}  // namespace spam
