#include "spam/datagen/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "spam/core/error.hpp"
#include "spam/core/rng.hpp"
#include "spam/datagen/prompts.hpp"
#include "spam/dsp/features.hpp"

namespace spam::datagen {
namespace {

using nlohmann::json;

constexpr std::size_t kMaxDraws = 10000;

std::string item_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt%05zu", index);
  return buf;
}

}  // namespace

Split split_for(const std::string& item_id) {
  const auto bucket = fnv1a64(item_id) % 10;
  if (bucket < 8) return Split::train;
  return bucket == 8 ? Split::dev : Split::test;
}

std::uint64_t item_seed(std::uint64_t corpus_seed, const std::string& item_id) {
  return derive_seed(corpus_seed, "item/" + item_id);
}

NegativeDraw draw_negative_key(const StyleKey& key, Rng& rng) {
  NegativeDraw draw;
  const std::size_t count = rng.bernoulli(0.5) ? 1 : 2;
  std::vector<Attribute> pool(kAttributes.begin(), kAttributes.end());
  // Partial Fisher-Yates gives a uniform subset of the requested size.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
    draw.flipped.push_back(pool[i]);
  }
  draw.key = key;
  for (Attribute attr : draw.flipped) {
    const int current = attribute_level(key, attr);
    const int others = attribute_cardinality(attr) - 1;
    int level = static_cast<int>(rng.index(static_cast<std::size_t>(others)));
    if (level >= current) ++level;
    draw.key = with_attribute(draw.key, attr, level);
  }
  return draw;
}

VariantSet make_variants(const UtteranceRecord& record, std::uint64_t seed) {
  if (parse_prompt(record.prompt) != record.style_key) {
    throw DataError("prompt of '" + record.item_id + "' does not describe its style key");
  }
  VariantSet set;
  set.item_id = record.item_id;
  set.original_prompt = record.prompt;

  Rng rng(derive_seed(seed, "variants/" + record.item_id));
  std::set<std::string> used{record.prompt};
  for (std::size_t draws = 0; set.positive_prompts.size() < kVariantsPerSide; ++draws) {
    if (draws > kMaxDraws) throw RuntimeFailure("could not find enough distinct paraphrases");
    auto text = render_prompt(record.style_key, rng.next_u64());
    if (used.insert(text).second) set.positive_prompts.push_back(std::move(text));
  }
  for (std::size_t draws = 0; set.negative_prompts.size() < kVariantsPerSide; ++draws) {
    if (draws > kMaxDraws) throw RuntimeFailure("could not find enough distinct negatives");
    const auto negative = draw_negative_key(record.style_key, rng);
    auto text = render_prompt(negative.key, rng.next_u64());
    if (used.insert(text).second) set.negative_prompts.push_back(std::move(text));
  }
  return set;
}

CorpusPaths corpus_paths(const std::filesystem::path& out_dir) {
  return {out_dir / "manifest.jsonl", out_dir / "variants.jsonl", out_dir / "audio"};
}

Manifest generate_corpus(const GenerationSpec& spec, const std::filesystem::path& out_dir) {
  validate(spec);
  const CorpusPaths paths = corpus_paths(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw RuntimeFailure("cannot create '" + out_dir.string() + "': " + ec.message());
  if (spec.n_items > 0) {
    std::filesystem::create_directories(paths.audio_dir, ec);
    if (ec) throw RuntimeFailure("cannot create '" + paths.audio_dir.string() + "': " + ec.message());
  }

  // Phoneme counts decide which transcripts fit the duration range.
  const auto& sentences = toy_sentences();
  std::vector<std::size_t> lengths;
  lengths.reserve(sentences.size());
  for (const auto& s : sentences) lengths.push_back(dsp::phonemize(s).phonemes.size());

  Manifest manifest;
  manifest.root = out_dir;
  std::vector<VariantSet> variants;
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    UtteranceRecord r;
    r.item_id = item_name(i);
    const std::uint64_t seed = item_seed(spec.seed, r.item_id);
    Rng rng(derive_seed(seed, "record"));
    r.style_key = style_key_from_index(rng.index(kNumStyleKeys));

    const double rate = draw_params(r.style_key, seed, spec).rate_pps;
    std::vector<std::size_t> fitting;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      const double duration = static_cast<double>(lengths[s]) / rate;
      if (spec.duration_range_s.contains(duration)) fitting.push_back(s);
    }
    if (fitting.empty()) {
      throw DataError("no toy sentence fits the duration range at " + std::to_string(rate) + " pps");
    }
    r.transcript = sentences[fitting[rng.index(fitting.size())]];
    r.prompt = render_prompt(r.style_key, rng.next_u64());
    r.split = split_for(r.item_id);
    r.audio_path = "audio/" + r.item_id + ".wav";

    write_wav(synthesize_utterance(r.style_key, r.transcript, seed, spec), manifest.audio_file(r));
    if (r.split == Split::test) variants.push_back(make_variants(r, seed));
    manifest.records.push_back(std::move(r));
  }
  write_manifest(manifest, paths.manifest);
  write_variants(variants, paths.variants);
  return manifest;
}

void write_variants(const std::vector<VariantSet>& sets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
  for (const auto& v : sets) {
    json obj;
    obj["item_id"] = v.item_id;
    obj["original_prompt"] = v.original_prompt;
    obj["positive_prompts"] = v.positive_prompts;
    obj["negative_prompts"] = v.negative_prompts;
    out << obj.dump() << '\n';
  }
  if (!out) throw RuntimeFailure("failed writing '" + path.string() + "'");
}

std::vector<VariantSet> read_variants(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open variants file '" + path.string() + "'");
  std::vector<VariantSet> sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const json obj = json::parse(line);
      VariantSet v;
      v.item_id = obj.at("item_id").get<std::string>();
      v.original_prompt = obj.at("original_prompt").get<std::string>();
      v.positive_prompts = obj.at("positive_prompts").get<std::vector<std::string>>();
      v.negative_prompts = obj.at("negative_prompts").get<std::vector<std::string>>();
      if (v.positive_prompts.empty() || v.negative_prompts.empty()) {
        throw DataError("variant set needs positive and negative prompts");
      }
      sets.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw DataError(where + "malformed variant set: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return sets;
}

}  // namespace spam::datagen
