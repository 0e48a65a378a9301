#include "spam/core/manifest.hpp"

#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "spam/core/error.hpp"

namespace spam {
namespace {

using nlohmann::json;

const std::set<std::string> kRecordFields{"manifest_version", "item_id", "audio_path", "transcript",
                                          "prompt",           "style_key", "split"};
const std::set<std::string> kKeyFields{"gender", "pitch", "speed", "energy"};

std::string required_string(const json& obj, const char* field) {
  const auto it = obj.find(field);
  if (it == obj.end()) throw DataError(std::string("missing field '") + field + "'");
  if (!it->is_string()) throw DataError(std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

StyleKey parse_key(const json& obj) {
  if (!obj.is_object()) throw DataError("field 'style_key' must be an object");
  for (const auto& [name, _] : obj.items()) {
    if (!kKeyFields.count(name)) throw DataError("unknown style_key field '" + name + "'");
  }
  StyleKey key;
  key.gender = parse_gender(required_string(obj, "gender"));
  key.pitch = parse_level(required_string(obj, "pitch"));
  key.speed = parse_speed(required_string(obj, "speed"));
  key.energy = parse_level(required_string(obj, "energy"));
  return key;
}

UtteranceRecord parse_record(const json& obj) {
  if (!obj.is_object()) throw DataError("record must be a JSON object");
  for (const auto& [name, _] : obj.items()) {
    if (!kRecordFields.count(name)) throw DataError("unknown field '" + name + "'");
  }
  const std::string version = required_string(obj, "manifest_version");
  if (version != kManifestVersion) {
    throw DataError("unsupported manifest version '" + version + "'");
  }
  UtteranceRecord r;
  r.item_id = required_string(obj, "item_id");
  r.audio_path = required_string(obj, "audio_path");
  r.transcript = required_string(obj, "transcript");
  r.prompt = required_string(obj, "prompt");
  r.split = parse_split(required_string(obj, "split"));
  const auto key = obj.find("style_key");
  if (key == obj.end()) throw DataError("missing field 'style_key'");
  r.style_key = parse_key(*key);
  return r;
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

std::vector<UtteranceRecord> Manifest::select(Split split) const {
  std::vector<UtteranceRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

void validate(const Manifest& manifest) {
  std::unordered_set<std::string> seen;
  for (const auto& r : manifest.records) {
    if (r.item_id.empty()) throw DataError("empty item_id");
    if (!seen.insert(r.item_id).second) throw DataError("duplicate item_id '" + r.item_id + "'");
    if (r.transcript.empty()) throw DataError("empty transcript for '" + r.item_id + "'");
    if (r.prompt.empty()) throw DataError("empty prompt for '" + r.item_id + "'");
  }
}

Manifest read_manifest(const std::filesystem::path& path, bool check_audio) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  Manifest manifest;
  manifest.root = path.parent_path();
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    UtteranceRecord r;
    try {
      r = parse_record(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(where + "malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    if (r.item_id.empty()) throw DataError(where + "empty item_id");
    if (r.transcript.empty()) throw DataError(where + "empty transcript");
    if (r.prompt.empty()) throw DataError(where + "empty prompt");
    if (!seen.insert(r.item_id).second) {
      throw DataError(where + "duplicate item_id '" + r.item_id + "'");
    }
    if (check_audio && !std::filesystem::is_regular_file(manifest.audio_file(r))) {
      throw DataError(where + "missing audio resource '" + r.audio_path + "'");
    }
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  validate(manifest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open manifest '" + path.string() + "' for writing");
  for (const auto& r : manifest.records) {
    json obj;
    obj["manifest_version"] = std::string(kManifestVersion);
    obj["item_id"] = r.item_id;
    obj["audio_path"] = r.audio_path;
    obj["transcript"] = r.transcript;
    obj["prompt"] = r.prompt;
    obj["style_key"] = {{"gender", to_string(r.style_key.gender)},
                        {"pitch", to_string(r.style_key.pitch)},
                        {"speed", to_string(r.style_key.speed)},
                        {"energy", to_string(r.style_key.energy)}};
    obj["split"] = to_string(r.split);
    out << obj.dump() << '\n';
  }
  if (!out) throw RuntimeFailure("failed writing manifest '" + path.string() + "'");
}

}  // namespace spam
