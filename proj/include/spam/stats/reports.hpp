#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "spam/stats/ttest.hpp"

namespace spam::stats {

enum class Variant { original, positive, negative };
const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

struct ScoreRow {
  std::string item_id;
  Variant variant = Variant::original;
  int variant_idx = 0;
  double score = 0.0;

  friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;
};

struct ItemScores {
  std::vector<double> original;
  std::vector<double> positive;
  std::vector<double> negative;
};

/// Groups rows by item id (sorted). Throws DataError for non-finite scores.
std::map<std::string, ItemScores> group_by_item(const ScoreTable& table);

/// Throws DataError unless every item has exactly one original and equal,
/// non-zero numbers of positives and negatives.
void validate_complete(const ScoreTable& table);

/// CSV with header `item_id,variant,variant_idx,score`; scores printed with
/// 17 significant digits so they read back exactly.
void write_score_table(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable read_score_table(const std::filesystem::path& path);

/// Writes rows one at a time in the same format.
class ScoreTableWriter {
 public:
  explicit ScoreTableWriter(const std::filesystem::path& path);
  void write(const ScoreRow& row);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

struct MosRow {
  std::string item_id;
  double mos = 0.0;
};

struct MosTable {
  std::vector<MosRow> rows;
};

/// CSV with header `item_id,mos`. MOS must lie in [1, 5] and ids be unique.
void write_mos_table(const MosTable& table, const std::filesystem::path& path);
MosTable read_mos_table(const std::filesystem::path& path);

/// Per item, the fraction of (positive, negative) pairs where the positive
/// scores higher (ties count half); averaged over items.
double adherence_rate(const ScoreTable& table);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

struct FaithfulnessReport {
  double ar = 0.0;
  std::size_t items = 0;
  MeanSd original, positive, negative;
  TTest t1;  ///< per-item mean positive minus original
  TTest t2;  ///< per-item mean negative minus original
  bool rejected_h1 = false;
  bool accepted_h2 = false;
  double alpha = 0.05;
};

/// Adherence rate plus the two paired t-tests. H1 counts as rejected when
/// positives show no detectable difference from originals (two-sided
/// p >= alpha); H2 is accepted when negatives score lower (t < 0 and
/// one-sided p < alpha).
FaithfulnessReport faithfulness_report(const ScoreTable& table, double alpha = 0.05);

struct PlausibilityReport {
  double lcc = 0.0;
  double srcc = 0.0;
  double ktau = 0.0;
  std::size_t items = 0;
};

/// Joins scores and MOS on item id and correlates them. Throws DataError
/// for fewer than 3 common items.
PlausibilityReport plausibility_report(const std::map<std::string, double>& scores, const MosTable& mos);

std::string format_text(const FaithfulnessReport& r, const std::string& system = "SPAM");
std::string format_json(const FaithfulnessReport& r);
std::string format_text(const PlausibilityReport& r, const std::string& system = "SPAM");
std::string format_json(const PlausibilityReport& r);

}  // namespace spam::stats
