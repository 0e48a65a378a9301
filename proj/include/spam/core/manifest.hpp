#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spam/core/style_key.hpp"

namespace spam {

enum class Split { train, dev, test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct UtteranceRecord {
  std::string item_id;
  std::string audio_path;  ///< relative to the manifest's directory
  std::string transcript;
  std::string prompt;
  StyleKey style_key;
  Split split = Split::train;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

inline constexpr std::string_view kManifestVersion = "1";

/// Ordered records plus the directory audio paths are resolved against.
struct Manifest {
  std::vector<UtteranceRecord> records;
  std::string version{kManifestVersion};
  std::filesystem::path root;

  std::filesystem::path audio_file(const UtteranceRecord& r) const { return root / r.audio_path; }
  std::vector<UtteranceRecord> select(Split split) const;
};

/// Line-delimited JSON. Every line is one record object:
///
///   {"manifest_version":"1","item_id":"utt00001","audio_path":"audio/utt00001.wav",
///    "transcript":"...","prompt":"...","split":"train",
///    "style_key":{"gender":"male","pitch":"high","speed":"normal","energy":"normal"}}
///
/// Blank lines are skipped. Unknown fields and unknown versions are rejected
/// with the offending line number. With `check_audio`, every audio_path must
/// name an existing file.
Manifest read_manifest(const std::filesystem::path& path, bool check_audio = true);

/// Writes records in order; an empty manifest produces an empty file.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Checks record-level invariants (unique ids, non-empty text fields).
void validate(const Manifest& manifest);

}  // namespace spam
