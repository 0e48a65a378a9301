#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spam/core/manifest.hpp"
#include "spam/core/rng.hpp"
#include "spam/datagen/generation.hpp"

namespace spam::datagen {

inline constexpr std::size_t kVariantsPerSide = 10;

/// Paraphrases (same key) and hard negatives (1-2 attributes flipped) of one
/// item's prompt.
struct VariantSet {
  std::string item_id;
  std::string original_prompt;
  std::vector<std::string> positive_prompts;
  std::vector<std::string> negative_prompts;

  friend bool operator==(const VariantSet&, const VariantSet&) = default;
};

/// Throws DataError if record.prompt does not parse to record.style_key.
VariantSet make_variants(const UtteranceRecord& record, std::uint64_t seed);

/// Key a negative was rendered from, with the attributes that were flipped.
struct NegativeDraw {
  StyleKey key;
  std::vector<Attribute> flipped;
};

/// The flip rule: 1 or 2 attributes with equal probability, the attribute
/// subset uniform, each flipped attribute moved to a uniform other level.
NegativeDraw draw_negative_key(const StyleKey& key, Rng& rng);

/// 80/10/10 by FNV-1a hash of the item id.
Split split_for(const std::string& item_id);

/// Per-item randomness stream, so items can be generated in any order.
std::uint64_t item_seed(std::uint64_t corpus_seed, const std::string& item_id);

struct CorpusPaths {
  std::filesystem::path manifest;
  std::filesystem::path variants;
  std::filesystem::path audio_dir;
};

CorpusPaths corpus_paths(const std::filesystem::path& out_dir);

/// Writes manifest.jsonl, variants.jsonl (one VariantSet per test item) and
/// audio/<item_id>.wav under out_dir. Keys are uniform over all 54.
Manifest generate_corpus(const GenerationSpec& spec, const std::filesystem::path& out_dir);

/// Line-delimited JSON, one VariantSet per line.
void write_variants(const std::vector<VariantSet>& sets, const std::filesystem::path& path);
std::vector<VariantSet> read_variants(const std::filesystem::path& path);

}  // namespace spam::datagen
