#include "spam/core/waveform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "spam/core/error.hpp"

namespace spam {
namespace {

std::int16_t to_pcm(double x) {
  const double v = std::round(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
  return v;
}

std::uint16_t get_u16(const std::string& s, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) |
                                    (static_cast<unsigned char>(s[at + 1]) << 8));
}

}  // namespace

void validate(const Waveform& wave) {
  if (wave.sample_rate_hz != kSampleRateHz) {
    throw DataError("waveform sample rate must be 16000 Hz, got " +
                    std::to_string(wave.sample_rate_hz));
  }
  if (wave.samples.empty()) throw DataError("waveform is empty");
  for (double x : wave.samples) {
    if (!std::isfinite(x) || x < -1.0 || x > 1.0) {
      throw DataError("waveform sample outside [-1, 1]");
    }
  }
}

Waveform quantize_pcm16(const Waveform& wave) {
  Waveform out;
  out.sample_rate_hz = wave.sample_rate_hz;
  out.samples.reserve(wave.samples.size());
  for (double x : wave.samples) out.samples.push_back(to_pcm(x) / 32768.0);
  return out;
}

void write_wav(const Waveform& wave, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::string bytes;
  bytes.reserve(44 + 2 * static_cast<std::size_t>(n));
  bytes += "RIFF";
  put_u32(bytes, 36 + 2 * n);
  bytes += "WAVE";
  bytes += "fmt ";
  put_u32(bytes, 16);
  put_u16(bytes, 1);  // PCM
  put_u16(bytes, 1);  // mono
  put_u32(bytes, static_cast<std::uint32_t>(wave.sample_rate_hz));
  put_u32(bytes, static_cast<std::uint32_t>(wave.sample_rate_hz) * 2);
  put_u16(bytes, 2);
  put_u16(bytes, 16);
  bytes += "data";
  put_u32(bytes, 2 * n);
  for (double x : wave.samples) put_u16(bytes, static_cast<std::uint16_t>(to_pcm(x)));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RuntimeFailure("failed writing '" + path.string() + "'");
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in '" + path.string() + "'";
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw DataError("not a RIFF/WAVE file" + where);
  }

  bool have_fmt = false;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = get_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw DataError("truncated chunk '" + id + "'" + where);
    if (id == "fmt ") {
      if (size < 16) throw DataError("short fmt chunk" + where);
      const auto format = get_u16(bytes, body);
      const auto channels = get_u16(bytes, body + 2);
      rate = get_u32(bytes, body + 4);
      const auto bits = get_u16(bytes, body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw DataError("only mono PCM-16 audio is supported" + where);
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError("data chunk before fmt chunk" + where);
      Waveform wave;
      wave.sample_rate_hz = static_cast<int>(rate);
      wave.samples.resize(size / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        wave.samples[i] = static_cast<std::int16_t>(get_u16(bytes, body + 2 * i)) / 32768.0;
      }
      validate(wave);
      return wave;
    }
    pos = body + size + (size & 1u);
  }
  throw DataError("no data chunk" + where);
}

}  // namespace spam
