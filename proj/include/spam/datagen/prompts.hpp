#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spam/core/style_key.hpp"

namespace spam::datagen {

/// Natural-language description of a key. The seed picks one of the
/// sentence templates and one synonym phrase per attribute level.
std::string render_prompt(const StyleKey& key, std::uint64_t seed);

/// Keyword parser over the synonym tables; inverse of render_prompt.
/// Throws DataError when an attribute is missing or ambiguous.
StyleKey parse_prompt(std::string_view prompt);

/// Lowercased words with sentence punctuation stripped.
std::vector<std::string> tokenize_prompt(std::string_view prompt);

/// Every word that render_prompt can emit, sorted and unique.
std::vector<std::string> prompt_lexicon();

std::size_t num_templates();
/// Synonym phrases for one attribute level.
const std::vector<std::string>& synonyms(Attribute attr, int level);

}  // namespace spam::datagen
