#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "spam/core/manifest.hpp"
#include "spam/datagen/corpus.hpp"
#include "spam/model/spam_model.hpp"
#include "spam/stats/reports.hpp"

namespace spam::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

/// Runs the `spam` command line (args exclude the program name) and returns
/// its exit code: 0 success, 1 usage error, 2 data error, 3 runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Scores the original, positive and negative prompts of every variant set
/// against its record's audio, one item at a time, in file order.
void score_variant_sets(const model::SpamModel& model, const Manifest& manifest,
                        const std::vector<datagen::VariantSet>& sets,
                        const std::function<void(const stats::ScoreRow&)>& sink);

/// Key under which a score row takes part in plausibility: the item id for
/// originals, "item/variant/idx" otherwise.
std::string plausibility_key(const stats::ScoreRow& row);

/// Constructed stand-in for MOS over every (item, variant) of the sets:
/// 5 minus the number of attributes on which the prompt's key differs from
/// the recording's key.
stats::MosTable proxy_mos(const Manifest& manifest, const std::vector<datagen::VariantSet>& sets);

}  // namespace spam::cli
