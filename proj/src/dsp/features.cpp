#include "spam/dsp/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include <unsupported/Eigen/FFT>

#include "spam/core/error.hpp"

namespace spam::dsp {

int frame_count(std::size_t num_samples) {
  if (num_samples <= static_cast<std::size_t>(kFrameLength)) return 1;
  return static_cast<int>((num_samples - kFrameLength) / kFrameHop) + 1;
}

FrameMatrix frame(const Waveform& wave) {
  const int n = frame_count(wave.samples.size());
  FrameMatrix frames = FrameMatrix::Zero(n, kFrameLength);
  const auto len = wave.samples.size();
  for (int f = 0; f < n; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * kFrameHop;
    const std::size_t stop = std::min(len, start + kFrameLength);
    for (std::size_t i = start; i < stop; ++i) frames(f, static_cast<Eigen::Index>(i - start)) = wave.samples[i];
  }
  return frames;
}

PitchTrack extract_pitch(const Waveform& wave) {
  const FrameMatrix frames = frame(wave);
  const double fs = wave.sample_rate_hz;
  const int min_lag = static_cast<int>(std::ceil(fs / kMaxF0Hz));
  const int max_lag = static_cast<int>(std::floor(fs / kMinF0Hz));
  const double log_min = std::log(kMinF0Hz);
  const double log_max = std::log(kMaxF0Hz);

  PitchTrack track;
  track.pitch_log_hz.assign(static_cast<std::size_t>(frames.rows()), 0.0);
  track.voicing_mask.assign(static_cast<std::size_t>(frames.rows()), false);

  // r[k] holds the normalized autocorrelation at lag min_lag - 1 + k.
  std::vector<double> r(static_cast<std::size_t>(max_lag - min_lag + 3), 0.0);
  std::vector<double> prefix(kFrameLength + 1);
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    const double* x = frames.row(f).data();
    prefix[0] = 0.0;
    for (int i = 0; i < kFrameLength; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
    if (prefix[kFrameLength] <= 0.0) continue;

    double best = -1.0;
    for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      const int m = kFrameLength - lag;
      double num = 0.0;
      for (int i = 0; i < m; ++i) num += x[i] * x[i + lag];
      const double e0 = prefix[m];
      const double e1 = prefix[kFrameLength] - prefix[lag];
      const double den = std::sqrt(e0 * e1);
      const double v = den > 1e-12 ? num / den : 0.0;
      r[static_cast<std::size_t>(lag - min_lag + 1)] = v;
      if (lag >= min_lag && lag <= max_lag) best = std::max(best, v);
    }
    if (best < kVoicingThreshold) continue;

    // The shortest lag whose local peak is close to the best one avoids
    // picking a multiple of the period.
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      const std::size_t k = static_cast<std::size_t>(lag - min_lag + 1);
      const double prev = r[k - 1];
      const double cur = r[k];
      const double next = r[k + 1];
      if (cur < 0.9 * best || cur < prev || cur < next) continue;
      double offset = 0.0;
      const double curvature = prev - 2.0 * cur + next;
      if (curvature < 0.0) offset = std::clamp(0.5 * (prev - next) / curvature, -0.5, 0.5);
      const double f0 = fs / (lag + offset);
      track.pitch_log_hz[static_cast<std::size_t>(f)] = std::clamp(std::log(f0), log_min, log_max);
      track.voicing_mask[static_cast<std::size_t>(f)] = true;
      break;
    }
  }
  return track;
}

std::vector<double> extract_energy(const Waveform& wave) {
  const FrameMatrix frames = frame(wave);
  std::vector<double> energy(static_cast<std::size_t>(frames.rows()));
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    const double rms = std::sqrt(frames.row(f).squaredNorm() / kFrameLength);
    energy[static_cast<std::size_t>(f)] = std::log(std::max(rms, kEnergyFloor));
  }
  return energy;
}

namespace {

constexpr int kFftSize = 512;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular HTK-style filters, one row per band over the rfft bins.
const FrameMatrix& mel_weights() {
  static const FrameMatrix weights = [] {
    constexpr int bins = kFftSize / 2 + 1;
    FrameMatrix w = FrameMatrix::Zero(kNumMelBands, bins);
    const double mel_hi = hz_to_mel(kSampleRateHz / 2.0);
    std::array<double, kNumMelBands + 2> edges{};
    for (int i = 0; i < kNumMelBands + 2; ++i) {
      edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_hi * i / (kNumMelBands + 1));
    }
    for (int b = 0; b < kNumMelBands; ++b) {
      const double lo = edges[static_cast<std::size_t>(b)];
      const double mid = edges[static_cast<std::size_t>(b + 1)];
      const double hi = edges[static_cast<std::size_t>(b + 2)];
      for (int k = 0; k < bins; ++k) {
        const double hz = static_cast<double>(k) * kSampleRateHz / kFftSize;
        double v = 0.0;
        if (hz > lo && hz <= mid) v = (hz - lo) / (mid - lo);
        else if (hz > mid && hz < hi) v = (hi - hz) / (hi - mid);
        w(b, k) = v;
      }
    }
    return w;
  }();
  return weights;
}

}  // namespace

FrameMatrix log_mel_filterbank(const Waveform& wave) {
  const FrameMatrix frames = frame(wave);
  const FrameMatrix& weights = mel_weights();
  std::vector<double> window(kFrameLength);
  for (int i = 0; i < kFrameLength; ++i) {
    window[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (kFrameLength - 1));
  }

  Eigen::FFT<double> fft;
  std::vector<double> buffer(kFftSize);
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(kFftSize / 2 + 1);
  FrameMatrix out(frames.rows(), kNumMelBands);
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    std::fill(buffer.begin(), buffer.end(), 0.0);
    for (int i = 0; i < kFrameLength; ++i) buffer[static_cast<std::size_t>(i)] = frames(f, i) * window[static_cast<std::size_t>(i)];
    fft.fwd(spectrum, buffer);
    for (int k = 0; k <= kFftSize / 2; ++k) power[k] = std::norm(spectrum[static_cast<std::size_t>(k)]);
    const Eigen::VectorXd bands = weights * power;
    for (int b = 0; b < kNumMelBands; ++b) out(f, b) = std::log(std::max(bands[b], 1e-10));
  }
  return out;
}

const std::vector<std::string>& phoneme_symbols() {
  static const std::vector<std::string> symbols{
      "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH",
      "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",
      "N",  "NG", "OW", "OY", "P",  "R",  "S",  "SH", "T",  "TH", "UH",
      "UW", "V",  "W",  "Y",  "Z",  "ZH", "AX", "AXR", "DX", "EL", "EN"};
  return symbols;
}

namespace {

int symbol_index(std::string_view symbol) {
  static const std::unordered_map<std::string, int> index = [] {
    std::unordered_map<std::string, int> m;
    const auto& s = phoneme_symbols();
    for (std::size_t i = 0; i < s.size(); ++i) m.emplace(s[i], static_cast<int>(i));
    return m;
  }();
  return index.at(std::string(symbol));
}

struct Rule {
  std::string_view graphemes;
  std::array<std::string_view, 2> phones;
};

// Longest match first; two-letter rules are tried before single letters.
constexpr std::array<Rule, 22> kDigraphs{{
    {"th", {"TH", ""}}, {"sh", {"SH", ""}}, {"ch", {"CH", ""}}, {"ng", {"NG", ""}},
    {"ph", {"F", ""}},  {"wh", {"W", ""}},  {"ck", {"K", ""}},  {"qu", {"K", "W"}},
    {"ee", {"IY", ""}}, {"ea", {"IY", ""}}, {"oo", {"UW", ""}}, {"ou", {"AW", ""}},
    {"ow", {"OW", ""}}, {"ai", {"EY", ""}}, {"ay", {"EY", ""}}, {"oi", {"OY", ""}},
    {"oy", {"OY", ""}}, {"er", {"ER", ""}}, {"ir", {"ER", ""}}, {"ur", {"ER", ""}},
    {"aw", {"AO", ""}}, {"au", {"AO", ""}},
}};

constexpr std::array<std::array<std::string_view, 2>, 26> kLetters{{
    {"AE", ""}, {"B", ""}, {"K", ""},  {"D", ""}, {"EH", ""}, {"F", ""}, {"G", ""},
    {"HH", ""}, {"IH", ""}, {"JH", ""}, {"K", ""}, {"L", ""},  {"M", ""}, {"N", ""},
    {"AA", ""}, {"P", ""}, {"K", ""},  {"R", ""}, {"S", ""},  {"T", ""}, {"AH", ""},
    {"V", ""},  {"W", ""}, {"K", "S"}, {"Y", ""}, {"Z", ""},
}};

constexpr std::array<std::string_view, 10> kDigitWords{"zero", "one", "two",   "three", "four",
                                                       "five", "six", "seven", "eight", "nine"};

void emit(std::vector<int>& out, const std::array<std::string_view, 2>& phones) {
  for (auto p : phones) {
    if (!p.empty()) out.push_back(symbol_index(p));
  }
}

void phonemize_letters(std::string_view word, std::vector<int>& out) {
  std::size_t i = 0;
  while (i < word.size()) {
    bool matched = false;
    if (i + 1 < word.size()) {
      for (const auto& rule : kDigraphs) {
        if (word.compare(i, 2, rule.graphemes) == 0) {
          emit(out, rule.phones);
          i += 2;
          matched = true;
          break;
        }
      }
    }
    if (!matched) {
      emit(out, kLetters[static_cast<std::size_t>(word[i] - 'a')]);
      ++i;
    }
  }
}

}  // namespace

PhonemeSequence phonemize(std::string_view transcript) {
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    const char c = transcript[i];
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == ' ' || c == '\'';
    if (!ok) {
      throw DataError("cannot phonemize character '" + std::string(1, c) + "' at position " +
                      std::to_string(i));
    }
  }
  PhonemeSequence seq;
  std::size_t i = 0;
  while (i < transcript.size()) {
    const char c = transcript[i];
    if (c == ' ' || c == '\'') {
      ++i;
    } else if (c >= '0' && c <= '9') {
      phonemize_letters(kDigitWords[static_cast<std::size_t>(c - '0')], seq.phonemes);
      ++i;
    } else {
      std::size_t j = i;
      while (j < transcript.size() && transcript[j] >= 'a' && transcript[j] <= 'z') ++j;
      phonemize_letters(transcript.substr(i, j - i), seq.phonemes);
      i = j;
    }
  }
  return seq;
}

double speaking_rate(std::string_view transcript, const Waveform& wave) {
  const auto seq = phonemize(transcript);
  if (seq.phonemes.empty()) throw DataError("speaking rate needs a non-empty transcript");
  if (wave.samples.empty()) throw DataError("speaking rate needs a non-empty waveform");
  return static_cast<double>(seq.phonemes.size()) / wave.duration_seconds();
}

bool FrameFeatures::mean_voiced_pitch(double& out) const {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < pitch_log_hz.size(); ++i) {
    if (voicing_mask[i]) {
      sum += pitch_log_hz[i];
      ++n;
    }
  }
  if (n == 0) return false;
  out = sum / n;
  return true;
}

double FrameFeatures::mean_energy() const {
  if (energy_log_rms.empty()) return std::log(kEnergyFloor);
  return std::accumulate(energy_log_rms.begin(), energy_log_rms.end(), 0.0) /
         static_cast<double>(energy_log_rms.size());
}

FrameFeatures extract_features(std::string_view transcript, const Waveform& wave) {
  FrameFeatures f;
  auto pitch = extract_pitch(wave);
  f.pitch_log_hz = std::move(pitch.pitch_log_hz);
  f.voicing_mask = std::move(pitch.voicing_mask);
  f.energy_log_rms = extract_energy(wave);
  f.frame_count = static_cast<int>(f.energy_log_rms.size());
  f.speaking_rate_pps = speaking_rate(transcript, wave);
  return f;
}

}  // namespace spam::dsp
