#include "spam/datagen/prompts.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "spam/core/error.hpp"
#include "spam/core/rng.hpp"

namespace spam::datagen {
namespace {

const std::array<std::string, 6> kTemplates{
    "{G} speaks with {P}, {S} and {E}.",
    "Generate {G} talking with {P} at {S} and {E}.",
    "The voice of {G} has {S}, {E} and {P}.",
    "{P} and {E} from {G}, delivered at {S}.",
    "Please render {G} using {E}, {P} and {S}.",
    "Expect {G} with {S}, {P}, and {E}.",
};

// Every phrase contains a word that names its attribute so that shared
// adjectives ("low", "high") never make a parse ambiguous.
const std::array<std::vector<std::string>, 2> kGender{{
    {"a male speaker", "a man", "a gentleman"},
    {"a female speaker", "a woman", "a lady"},
}};
const std::array<std::vector<std::string>, 3> kPitch{{
    {"low pitch", "deep tone", "low register"},
    {"normal pitch", "moderate tone", "medium register"},
    {"high pitch", "bright tone", "high register"},
}};
const std::array<std::vector<std::string>, 3> kSpeed{{
    {"slow speed", "leisurely pace", "slow tempo"},
    {"normal speed", "moderate pace", "steady tempo"},
    {"fast speed", "rapid pace", "quick tempo"},
}};
const std::array<std::vector<std::string>, 3> kEnergy{{
    {"low volume", "soft energy", "quiet delivery"},
    {"normal volume", "moderate energy", "even delivery"},
    {"high volume", "strong energy", "loud delivery"},
}};

// Gender is parsed from single identifying words.
const std::array<std::vector<std::string>, 2> kGenderWords{{
    {"male", "man", "gentleman"},
    {"female", "woman", "lady"},
}};

std::string replace(std::string text, std::string_view slot, const std::string& value) {
  const auto at = text.find(slot);
  if (at != std::string::npos) text.replace(at, slot.size(), value);
  return text;
}

bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
      return true;
    }
  }
  return false;
}

int match_level(const std::vector<std::string>& tokens, Attribute attr) {
  int found = -1;
  for (int level = 0; level < attribute_cardinality(attr); ++level) {
    const auto& table = attr == Attribute::gender ? kGenderWords[static_cast<std::size_t>(level)]
                                                  : synonyms(attr, level);
    for (const auto& phrase : table) {
      if (contains_phrase(tokens, tokenize_prompt(phrase))) {
        if (found >= 0 && found != level) {
          throw DataError("prompt names several " + std::string(to_string(attr)) + " levels");
        }
        found = level;
      }
    }
  }
  if (found < 0) throw DataError("prompt does not describe " + std::string(to_string(attr)));
  return found;
}

}  // namespace

std::size_t num_templates() { return kTemplates.size(); }

const std::vector<std::string>& synonyms(Attribute attr, int level) {
  const auto l = static_cast<std::size_t>(level);
  switch (attr) {
    case Attribute::gender: return kGender.at(l);
    case Attribute::pitch: return kPitch.at(l);
    case Attribute::speed: return kSpeed.at(l);
    case Attribute::energy: return kEnergy.at(l);
  }
  throw UsageError("unknown attribute");
}

std::string render_prompt(const StyleKey& key, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "prompt"));
  std::string text = kTemplates[rng.index(kTemplates.size())];
  const auto pick = [&](Attribute attr) {
    const auto& options = synonyms(attr, attribute_level(key, attr));
    return options[rng.index(options.size())];
  };
  const std::string g = pick(Attribute::gender);
  const std::string p = pick(Attribute::pitch);
  const std::string s = pick(Attribute::speed);
  const std::string e = pick(Attribute::energy);
  text = replace(text, "{G}", g);
  text = replace(text, "{P}", p);
  text = replace(text, "{S}", s);
  text = replace(text, "{E}", e);
  text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text;
}

std::vector<std::string> tokenize_prompt(std::string_view prompt) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : prompt) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u) || c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':') {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

StyleKey parse_prompt(std::string_view prompt) {
  const auto tokens = tokenize_prompt(prompt);
  StyleKey key;
  key = with_attribute(key, Attribute::gender, match_level(tokens, Attribute::gender));
  key = with_attribute(key, Attribute::pitch, match_level(tokens, Attribute::pitch));
  key = with_attribute(key, Attribute::speed, match_level(tokens, Attribute::speed));
  key = with_attribute(key, Attribute::energy, match_level(tokens, Attribute::energy));
  return key;
}

std::vector<std::string> prompt_lexicon() {
  std::set<std::string> words;
  const auto add = [&](const std::string& text) {
    std::string plain = text;
    for (auto slot : {"{G}", "{P}", "{S}", "{E}"}) plain = replace(plain, slot, "");
    for (auto& t : tokenize_prompt(plain)) words.insert(t);
  };
  for (const auto& t : kTemplates) add(t);
  for (Attribute attr : kAttributes) {
    for (int level = 0; level < attribute_cardinality(attr); ++level) {
      for (const auto& phrase : synonyms(attr, level)) add(phrase);
    }
  }
  return {words.begin(), words.end()};
}

}  // namespace spam::datagen
