#include "spam/datagen/generation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "spam/core/error.hpp"
#include "spam/core/rng.hpp"
#include "spam/dsp/features.hpp"

namespace spam::datagen {
namespace {

using nlohmann::json;

// Peak of an RMS-normalized harmonic tone relative to its sine-equivalent
// amplitude stays below this for both spectral tilts.
constexpr double kCrestBudget = 1.75;
constexpr int kMaxHarmonics = 20;
constexpr double kHarmonicCeilingHz = 4000.0;

void check_interval(const Interval& iv, const std::string& what) {
  if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi)) || !(iv.lo < iv.hi)) {
    throw DataError(what + ": interval must satisfy lo < hi");
  }
}

template <std::size_t N>
void check_levels(const std::array<Interval, N>& levels, const std::string& what) {
  for (std::size_t i = 0; i < N; ++i) check_interval(levels[i], what);
  for (std::size_t i = 0; i + 1 < N; ++i) {
    if (levels[i].hi > levels[i + 1].lo) throw DataError(what + ": level intervals overlap");
  }
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

Interval interval_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw DataError(what + ": expected [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

template <std::size_t N>
std::array<Interval, N> levels_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N) throw DataError(what + ": wrong number of levels");
  std::array<Interval, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = interval_from(j[i], what);
  return out;
}

// Draw uniformly from the interval shrunk by a relative margin so jittered
// values still land inside it.
double draw_inside(Rng& rng, const Interval& iv, double margin) {
  const double lo = iv.lo * (1.0 + margin);
  const double hi = iv.hi / (1.0 + margin);
  if (lo >= hi) return 0.5 * (iv.lo + iv.hi);
  return rng.uniform(lo, hi);
}

}  // namespace

void validate(const GenerationSpec& spec) {
  for (std::size_t g = 0; g < 2; ++g) {
    check_levels(spec.f0_ranges_hz[g], "f0_ranges_hz");
    for (const auto& iv : spec.f0_ranges_hz[g]) {
      if (iv.lo < 60.0 || iv.hi > 400.0) throw DataError("f0_ranges_hz must lie within [60, 400] Hz");
    }
  }
  check_levels(spec.rate_ranges_pps, "rate_ranges_pps");
  if (spec.rate_ranges_pps[0].lo <= 0.0) throw DataError("rate_ranges_pps must be positive");
  check_levels(spec.amplitude_ranges, "amplitude_ranges");
  if (spec.amplitude_ranges[0].lo <= 0.0) throw DataError("amplitude_ranges must be positive");
  if (spec.amplitude_ranges[2].hi * kCrestBudget > 1.0) {
    throw DataError("amplitude_ranges: top level would clip (max " +
                    std::to_string(1.0 / kCrestBudget) + ")");
  }
  check_interval(spec.duration_range_s, "duration_range_s");
  if (spec.duration_range_s.lo <= 0.0) throw DataError("duration_range_s must be positive");
}

GenerationSpec load_generation_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open generation spec '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed generation spec: " + std::string(e.what()));
  }
  GenerationSpec spec;
  for (const auto& [name, value] : j.items()) {
    if (name == "n_items") spec.n_items = value.get<std::size_t>();
    else if (name == "seed") spec.seed = value.get<std::uint64_t>();
    else if (name == "f0_ranges_hz") {
      if (!value.is_object()) throw DataError("f0_ranges_hz: expected {\"male\": ..., \"female\": ...}");
      for (const auto& [gender, levels] : value.items()) {
        spec.f0_ranges_hz[static_cast<std::size_t>(parse_gender(gender))] = levels_from<3>(levels, "f0_ranges_hz");
      }
    } else if (name == "rate_ranges_pps") spec.rate_ranges_pps = levels_from<3>(value, name);
    else if (name == "amplitude_ranges") spec.amplitude_ranges = levels_from<3>(value, name);
    else if (name == "duration_range_s") spec.duration_range_s = interval_from(value, name);
    else throw DataError("unknown generation spec field '" + name + "'");
  }
  validate(spec);
  return spec;
}

std::string generation_spec_json(const GenerationSpec& spec) {
  json j;
  j["n_items"] = spec.n_items;
  j["seed"] = spec.seed;
  for (std::size_t g = 0; g < 2; ++g) {
    json levels = json::array();
    for (const auto& iv : spec.f0_ranges_hz[g]) levels.push_back(interval_json(iv));
    j["f0_ranges_hz"][std::string(to_string(static_cast<Gender>(g)))] = levels;
  }
  for (const auto& iv : spec.rate_ranges_pps) j["rate_ranges_pps"].push_back(interval_json(iv));
  for (const auto& iv : spec.amplitude_ranges) j["amplitude_ranges"].push_back(interval_json(iv));
  j["duration_range_s"] = interval_json(spec.duration_range_s);
  return j.dump(2);
}

UtteranceParams draw_params(const StyleKey& key, std::uint64_t seed, const GenerationSpec& spec) {
  Rng rng(derive_seed(seed, "utterance"));
  UtteranceParams p;
  p.rate_pps = rng.uniform(spec.rate_ranges_pps[static_cast<std::size_t>(key.speed)].lo,
                           spec.rate_ranges_pps[static_cast<std::size_t>(key.speed)].hi);
  p.base_f0_hz = draw_inside(
      rng, spec.f0_ranges_hz[static_cast<std::size_t>(key.gender)][static_cast<std::size_t>(key.pitch)],
      kSegmentJitter);
  p.amplitude = draw_inside(rng, spec.amplitude_ranges[static_cast<std::size_t>(key.energy)], 0.05);
  return p;
}

Waveform synthesize_utterance(const StyleKey& key, std::string_view transcript, std::uint64_t seed,
                              const GenerationSpec& spec) {
  const auto phonemes = dsp::phonemize(transcript).phonemes;
  if (phonemes.empty()) throw DataError("cannot synthesize an empty transcript");

  const UtteranceParams params = draw_params(key, seed, spec);
  Rng jitter(derive_seed(seed, "jitter"));
  const double fs = kSampleRateHz;
  const double tilt = key.gender == Gender::male ? 2.0 : 1.0;
  const auto gap = static_cast<std::size_t>(std::lround(kSegmentGapSeconds * fs));
  const auto ramp = static_cast<std::size_t>(std::lround(kRampSeconds * fs));

  const std::size_t n = phonemes.size();
  const auto boundary = [&](std::size_t k) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(k) * fs / params.rate_pps));
  };

  Waveform wave;
  wave.samples.assign(boundary(n), 0.0);
  for (std::size_t seg = 0; seg < n; ++seg) {
    const std::size_t start = boundary(seg);
    const std::size_t length = boundary(seg + 1) - start;
    const std::size_t tone = length > gap + 2 * ramp ? length - gap : length / 2;
    const double f0 = params.base_f0_hz * (1.0 + jitter.uniform(-kSegmentJitter, kSegmentJitter));

    const int harmonics = std::clamp(static_cast<int>(kHarmonicCeilingHz / f0), 1, kMaxHarmonics);
    std::vector<double> weight(static_cast<std::size_t>(harmonics));
    std::vector<double> phase(static_cast<std::size_t>(harmonics));
    double power = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
      const auto idx = static_cast<std::size_t>(k - 1);
      weight[idx] = std::pow(k, -tilt);
      // Schroeder phases keep the crest factor low.
      phase[idx] = std::numbers::pi * k * (k - 1) / harmonics;
      power += weight[idx] * weight[idx];
    }
    const double gain = params.amplitude / std::sqrt(power);
    const double omega = 2.0 * std::numbers::pi * f0 / fs;

    for (std::size_t i = 0; i < tone; ++i) {
      const double theta = omega * static_cast<double>(i);
      double x = 0.0;
      for (std::size_t k = 0; k < weight.size(); ++k) {
        x += weight[k] * std::sin(static_cast<double>(k + 1) * theta + phase[k]);
      }
      double env = 1.0;
      if (i < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / ramp);
      else if (i + ramp >= tone)
        env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(tone - 1 - i) / ramp);
      wave.samples[start + i] = std::clamp(gain * env * x, -1.0, 1.0);
    }
  }
  return wave;
}

const std::vector<std::string>& toy_sentences() {
  static const std::vector<std::string> sentences = [] {
    const std::vector<std::string> words{
        "the",   "cat",   "sat",   "on",    "mat",   "we",    "go",    "home",  "now",   "sun",
        "is",    "warm",  "it",    "was",   "red",   "car",   "big",   "dog",   "ran",   "fast",
        "she",   "said",  "yes",   "no",    "look",  "at",    "this",  "map",   "rain",  "fell",
        "all",   "day",   "open",  "door",  "wind",  "blew",  "hard",  "keep",  "calm",  "and",
        "read",  "book",  "park",  "tree",  "bird",  "sang",  "song",  "ship",  "sail",  "sea",
        "milk",  "tea",   "cup",   "hot",   "cold",  "new",   "old",   "town",  "road",  "light",
        "night", "moon",  "star",  "walk",  "talk",  "bell",  "rang",  "twice", "clock", "time"};
    const std::vector<std::string> numbers{"2", "7", "9", "4"};
    std::vector<std::string> out;
    out.reserve(200);
    std::uint32_t state = 12345;
    const auto next = [&state](std::uint32_t n) {
      state = state * 1664525u + 1013904223u;
      return (state >> 8) % n;
    };
    for (std::size_t i = 0; i < 200; ++i) {
      const std::size_t length = 1 + i % 7;
      std::string s;
      for (std::size_t w = 0; w < length; ++w) {
        if (!s.empty()) s += ' ';
        s += words[next(static_cast<std::uint32_t>(words.size()))];
      }
      if (i % 25 == 24) s += " " + numbers[(i / 25) % numbers.size()];
      if (i % 40 == 13) s += " it's";
      out.push_back(std::move(s));
    }
    return out;
  }();
  return sentences;
}

}  // namespace spam::datagen
