#include "spam/stats/reports.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spam/core/error.hpp"
#include "spam/stats/correlation.hpp"

namespace spam::stats {

using nlohmann::json;

const char* to_string(Variant v) {
  switch (v) {
    case Variant::original: return "original";
    case Variant::positive: return "positive";
    case Variant::negative: return "negative";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "original") return Variant::original;
  if (s == "positive") return Variant::positive;
  if (s == "negative") return Variant::negative;
  throw DataError("unknown variant '" + s + "'");
}

std::map<std::string, ItemScores> group_by_item(const ScoreTable& table) {
  std::map<std::string, ItemScores> items;
  for (const auto& r : table.rows) {
    if (!std::isfinite(r.score)) throw DataError("non-finite score for item '" + r.item_id + "'");
    auto& it = items[r.item_id];
    switch (r.variant) {
      case Variant::original: it.original.push_back(r.score); break;
      case Variant::positive: it.positive.push_back(r.score); break;
      case Variant::negative: it.negative.push_back(r.score); break;
    }
  }
  return items;
}

void validate_complete(const ScoreTable& table) {
  const auto items = group_by_item(table);
  if (items.empty()) throw DataError("score table is empty");
  for (const auto& [id, s] : items) {
    if (s.original.size() != 1) throw DataError("item '" + id + "' needs exactly one original score");
    if (s.positive.empty() || s.positive.size() != s.negative.size()) {
      throw DataError("item '" + id + "' needs equal, non-zero numbers of positive and negative scores");
    }
  }
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError(where + ": bad number '" + s + "'");
  return v;
}

template <typename RowFn>
void read_csv(const std::filesystem::path& path, const std::string& header, RowFn on_row) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto got = split_csv(line), want = split_csv(header);
  for (std::size_t i = 0; i < std::max(got.size(), want.size()); ++i) {
    if (i >= got.size()) throw DataError(path.string() + ": header is missing column '" + want[i] + "'");
    if (i >= want.size()) throw DataError(path.string() + ": unexpected header column '" + got[i] + "'");
    if (got[i] != want[i]) {
      throw DataError(path.string() + ": bad header column '" + got[i] + "' (expected '" + want[i] + "')");
    }
  }
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    on_row(split_csv(line), path.string() + ":" + std::to_string(n));
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  return out;
}

}  // namespace

ScoreTableWriter::ScoreTableWriter(const std::filesystem::path& path) : out_(open_for_write(path)), path_(path) {
  out_ << "item_id,variant,variant_idx,score\n";
}

void ScoreTableWriter::write(const ScoreRow& r) {
  if (r.item_id.find(',') != std::string::npos) throw DataError("item id contains a comma: " + r.item_id);
  out_ << r.item_id << ',' << to_string(r.variant) << ',' << r.variant_idx << ',' << format_double(r.score) << '\n';
  if (!out_) throw RuntimeFailure("cannot write " + path_.string());
}

void write_score_table(const ScoreTable& table, const std::filesystem::path& path) {
  ScoreTableWriter writer(path);
  for (const auto& r : table.rows) writer.write(r);
}

ScoreTable read_score_table(const std::filesystem::path& path) {
  ScoreTable table;
  read_csv(path, "item_id,variant,variant_idx,score", [&](const std::vector<std::string>& f, const std::string& at) {
    if (f.size() != 4) throw DataError(at + ": expected 4 fields");
    ScoreRow r;
    r.item_id = f[0];
    r.variant = parse_variant(f[1]);
    int idx = 0;
    const auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), idx);
    if (ec != std::errc() || ptr != f[2].data() + f[2].size() || idx < 0) {
      throw DataError(at + ": bad variant_idx '" + f[2] + "'");
    }
    r.variant_idx = idx;
    r.score = parse_double(f[3], at);
    if (!std::isfinite(r.score)) throw DataError(at + ": score must be finite");
    table.rows.push_back(r);
  });
  return table;
}

void write_mos_table(const MosTable& table, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "item_id,mos\n";
  for (const auto& r : table.rows) out << r.item_id << ',' << format_double(r.mos) << '\n';
}

MosTable read_mos_table(const std::filesystem::path& path) {
  MosTable table;
  std::set<std::string> seen;
  read_csv(path, "item_id,mos", [&](const std::vector<std::string>& f, const std::string& at) {
    if (f.size() != 2) throw DataError(at + ": expected 2 fields");
    const double mos = parse_double(f[1], at);
    if (!(mos >= 1.0 && mos <= 5.0)) throw DataError(at + ": MOS must be in [1, 5]");
    if (!seen.insert(f[0]).second) throw DataError(at + ": duplicate item_id '" + f[0] + "'");
    table.rows.push_back({f[0], mos});
  });
  return table;
}

double adherence_rate(const ScoreTable& table) {
  const auto items = group_by_item(table);
  if (items.empty()) throw DataError("score table is empty");
  double total = 0.0;
  for (const auto& [id, s] : items) {
    if (s.positive.empty() || s.negative.empty()) {
      throw DataError("item '" + id + "' is missing positive or negative scores");
    }
    double wins = 0.0;
    for (double p : s.positive) {
      for (double n : s.negative) wins += p > n ? 1.0 : p == n ? 0.5 : 0.0;
    }
    total += wins / static_cast<double>(s.positive.size() * s.negative.size());
  }
  return total / static_cast<double>(items.size());
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd m{mean_of(v), 0.0};
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

}  // namespace

FaithfulnessReport faithfulness_report(const ScoreTable& table, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must be in (0, 1)");
  validate_complete(table);
  const auto items = group_by_item(table);
  std::vector<double> s0, sp, sn, d1, d2;
  for (const auto& [id, s] : items) {
    s0.push_back(s.original[0]);
    sp.push_back(mean_of(s.positive));
    sn.push_back(mean_of(s.negative));
    d1.push_back(sp.back() - s0.back());
    d2.push_back(sn.back() - s0.back());
  }
  FaithfulnessReport r;
  r.alpha = alpha;
  r.items = items.size();
  r.ar = adherence_rate(table);
  r.original = mean_sd(s0);
  r.positive = mean_sd(sp);
  r.negative = mean_sd(sn);
  r.t1 = paired_t(d1);
  r.t2 = paired_t(d2);
  r.rejected_h1 = r.t1.p_two_sided >= alpha;
  r.accepted_h2 = r.t2.t < 0.0 && r.t2.p_one_sided_less < alpha;
  return r;
}

PlausibilityReport plausibility_report(const std::map<std::string, double>& scores, const MosTable& mos) {
  std::vector<double> x, y;
  for (const auto& row : mos.rows) {
    const auto it = scores.find(row.item_id);
    if (it == scores.end()) continue;
    x.push_back(it->second);
    y.push_back(row.mos);
  }
  if (x.size() < 3) throw DataError("plausibility needs at least 3 items with both a score and a MOS");
  return {pearson(x, y), spearman(x, y), kendall_tau(x, y), x.size()};
}

std::string format_text(const FaithfulnessReport& r, const std::string& system) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-10s %-7s %-17s %-34s %-34s\n", "", "", "Original", "Positive (H1 reject?)",
                "Negative (H2 accept?)");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-10s %-7s %-17s %-17s %-10s %-5s %-17s %-10s %-5s\n", "Metric", "AR", "mean (sd)",
                "mean (sd)", "t", "", "mean (sd)", "t", "");
  out += buf;
  const auto cell = [](const MeanSd& m) {
    char b[64];
    std::snprintf(b, sizeof(b), "%.3f (%.3f)", m.mean, m.sd);
    return std::string(b);
  };
  const auto tcell = [](const TTest& t, double p) {
    char b[64];
    std::snprintf(b, sizeof(b), "%.3f%s", t.t, significance_stars(p).c_str());
    return std::string(b);
  };
  std::snprintf(buf, sizeof(buf), "%-10s %-7.3f %-17s %-17s %-10s %-5s %-17s %-10s %-5s\n", system.c_str(), r.ar,
                cell(r.original).c_str(), cell(r.positive).c_str(), tcell(r.t1, r.t1.p_two_sided).c_str(),
                r.rejected_h1 ? "yes" : "no", cell(r.negative).c_str(),
                tcell(r.t2, r.t2.p_one_sided_less).c_str(), r.accepted_h2 ? "yes" : "no");
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "items=%zu alpha=%g  H1 two-sided p=%.3g  H2 one-sided p=%.3g  (* p<0.05, ** p<0.01, *** p<0.001)\n",
                r.items, r.alpha, r.t1.p_two_sided, r.t2.p_one_sided_less);
  out += buf;
  return out;
}

std::string format_json(const FaithfulnessReport& r) {
  const json j = {
      {"ar", r.ar},
      {"items", r.items},
      {"alpha", r.alpha},
      {"original", {{"mean", r.original.mean}, {"sd", r.original.sd}}},
      {"positive",
       {{"mean", r.positive.mean},
        {"sd", r.positive.sd},
        {"t", r.t1.t},
        {"p_two_sided", r.t1.p_two_sided},
        {"rejected_h1", r.rejected_h1},
        {"stars", significance_stars(r.t1.p_two_sided)}}},
      {"negative",
       {{"mean", r.negative.mean},
        {"sd", r.negative.sd},
        {"t", r.t2.t},
        {"p_one_sided_less", r.t2.p_one_sided_less},
        {"accepted_h2", r.accepted_h2},
        {"stars", significance_stars(r.t2.p_one_sided_less)}}}};
  return j.dump(2) + "\n";
}

std::string format_text(const PlausibilityReport& r, const std::string& system) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %-7s %-7s %-7s\n%-10s %-7.3f %-7.3f %-7.3f\nitems=%zu\n", "Metric", "LCC",
                "SRCC", "KTAU", system.c_str(), r.lcc, r.srcc, r.ktau, r.items);
  return buf;
}

std::string format_json(const PlausibilityReport& r) {
  return json{{"lcc", r.lcc}, {"srcc", r.srcc}, {"ktau", r.ktau}, {"items", r.items}}.dump(2) + "\n";
}

}  // namespace spam::stats
