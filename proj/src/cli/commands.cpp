#include "spam/cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spam/cli/run_config.hpp"
#include "spam/core/error.hpp"
#include "spam/datagen/generation.hpp"
#include "spam/datagen/prompts.hpp"
#include "spam/train/checkpoint.hpp"
#include "spam/train/config_json.hpp"

namespace spam::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void score_variant_sets(const model::SpamModel& model, const Manifest& manifest,
                        const std::vector<datagen::VariantSet>& sets,
                        const std::function<void(const stats::ScoreRow&)>& sink) {
  std::map<std::string, const UtteranceRecord*> by_id;
  for (const auto& r : manifest.records) by_id[r.item_id] = &r;
  for (const auto& set : sets) {
    const auto it = by_id.find(set.item_id);
    if (it == by_id.end()) throw DataError("variant set for unknown item '" + set.item_id + "'");
    const auto& record = *it->second;
    const auto speech = model.encode_speech(read_wav(manifest.audio_file(record)), record.transcript);
    const auto score = [&](const std::string& prompt) {
      return model::similarity(speech, model.encode_prompt(prompt));
    };
    sink({set.item_id, stats::Variant::original, 0, score(set.original_prompt)});
    for (std::size_t i = 0; i < set.positive_prompts.size(); ++i) {
      sink({set.item_id, stats::Variant::positive, static_cast<int>(i), score(set.positive_prompts[i])});
    }
    for (std::size_t i = 0; i < set.negative_prompts.size(); ++i) {
      sink({set.item_id, stats::Variant::negative, static_cast<int>(i), score(set.negative_prompts[i])});
    }
  }
}

std::string plausibility_key(const stats::ScoreRow& row) {
  if (row.variant == stats::Variant::original) return row.item_id;
  return row.item_id + "/" + stats::to_string(row.variant) + "/" + std::to_string(row.variant_idx);
}

stats::MosTable proxy_mos(const Manifest& manifest, const std::vector<datagen::VariantSet>& sets) {
  std::map<std::string, StyleKey> keys;
  for (const auto& r : manifest.records) keys[r.item_id] = r.style_key;
  stats::MosTable table;
  for (const auto& set : sets) {
    const auto it = keys.find(set.item_id);
    if (it == keys.end()) throw DataError("variant set for unknown item '" + set.item_id + "'");
    const auto mos = [&](const std::string& prompt) {
      return 5.0 - attribute_distance(datagen::parse_prompt(prompt), it->second);
    };
    auto add = [&](stats::Variant v, int idx, const std::string& prompt) {
      table.rows.push_back({plausibility_key({set.item_id, v, idx, 0.0}), mos(prompt)});
    };
    add(stats::Variant::original, 0, set.original_prompt);
    for (std::size_t i = 0; i < set.positive_prompts.size(); ++i) {
      add(stats::Variant::positive, static_cast<int>(i), set.positive_prompts[i]);
    }
    for (std::size_t i = 0; i < set.negative_prompts.size(); ++i) {
      add(stats::Variant::negative, static_cast<int>(i), set.negative_prompts[i]);
    }
  }
  return table;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw RuntimeFailure("cannot write " + path.string());
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create directory " + dir.string() + ": " + ec.message());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw DataError(what + " not found: " + path.string());
}

fs::path parent_or_dot(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

// The file loads back with --config.
void write_resolved_config(const fs::path& dir, const RunConfig& config) {
  write_text(dir / "run_config.json", to_json(config).dump(2) + "\n");
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Options {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;

  // gen-data
  std::string out_dir;
  std::optional<std::size_t> n_items;
  std::string spec_file;

  // train / score / eval
  std::string data_dir;
  std::string manifest;
  std::string checkpoint;
  std::string metrics;
  std::optional<std::size_t> max_steps;
  std::string audio;
  std::string transcript;
  std::optional<std::string> prompt;
  std::string variants;
  std::string scores;
  std::string mos;
  std::string reports_dir;
  std::optional<double> alpha;
};

RunConfig resolve(const Options& o) {
  RunConfig c = o.config_file.empty() ? RunConfig{} : load_run_config(o.config_file);
  if (o.seed) c.seed = *o.seed;
  if (o.deterministic) c.deterministic = true;
  if (!o.data_dir.empty()) c.data_dir = o.data_dir;
  if (!o.checkpoint.empty()) c.checkpoint = o.checkpoint;
  if (!o.reports_dir.empty()) c.reports_dir = o.reports_dir;
  if (o.max_steps) c.train.max_steps = *o.max_steps;
  if (o.alpha) c.alpha = *o.alpha;
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw UsageError("--alpha must be in (0, 1)");
  train::validate(c.train);
  return c;
}

fs::path manifest_path(const Options& o, const RunConfig& c) {
  return o.manifest.empty() ? datagen::corpus_paths(c.data_dir).manifest : fs::path(o.manifest);
}

int cmd_gen_data(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  datagen::GenerationSpec spec;
  if (!o.spec_file.empty()) spec = datagen::load_generation_spec(o.spec_file);
  if (o.n_items) spec.n_items = *o.n_items;
  if (o.seed || !o.config_file.empty()) spec.seed = c.seed;
  datagen::validate(spec);

  const fs::path dir = o.out_dir;
  ensure_dir(dir);
  const auto manifest = datagen::generate_corpus(spec, dir);
  const auto paths = datagen::corpus_paths(dir);
  std::vector<datagen::VariantSet> sets;
  if (fs::exists(paths.variants)) sets = datagen::read_variants(paths.variants);
  stats::write_mos_table(proxy_mos(manifest, sets), dir / "proxy_mos.csv");
  write_resolved_config(dir, c);
  write_text(dir / "generation_spec.json", datagen::generation_spec_json(spec));

  out << "records: " << manifest.records.size() << " (train " << manifest.select(Split::train).size() << ", dev "
      << manifest.select(Split::dev).size() << ", test " << manifest.select(Split::test).size() << ")\n"
      << "variant sets: " << sets.size() << "\n"
      << "manifest: " << paths.manifest.string() << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  const auto mpath = manifest_path(o, c);
  require_file(mpath, "manifest");
  const auto manifest = read_manifest(mpath);

  const fs::path out_dir = parent_or_dot(c.checkpoint);
  ensure_dir(out_dir);
  const fs::path metrics_path = o.metrics.empty() ? out_dir / "metrics.jsonl" : fs::path(o.metrics);
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw RuntimeFailure("cannot write " + metrics_path.string());

  const auto config = c.resolved_train();
  const auto result = train::train(manifest, config, [&](const train::StepMetrics& m) {
    json line = {{"step", m.step},          {"L", m.loss.total},  {"L_con", m.loss.contrastive},
                 {"L_p", m.loss.pitch},     {"L_v", m.loss.speed}, {"L_e", m.loss.energy}};
    if (m.dev_contrastive) line["dev_L_con"] = *m.dev_contrastive;
    metrics << line.dump() << "\n";
    metrics.flush();
  });
  train::save_checkpoint({result.model, result.aux, result.config}, c.checkpoint);
  write_resolved_config(out_dir, c);

  char buf[256];
  std::snprintf(buf, sizeof(buf), "steps: %zu%s\nbest step: %zu\ndev contrastive loss: %.4f -> %.4f\n", result.steps,
                result.early_stopped ? " (early stop)" : "", result.best_step, result.initial_dev_contrastive,
                result.best_dev_contrastive);
  out << buf << "checkpoint: " << c.checkpoint.string() << "\nmetrics: " << metrics_path.string() << "\n";
  return kExitOk;
}

int cmd_score(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  require_file(c.checkpoint, "checkpoint");
  const auto ckpt = train::load_checkpoint(c.checkpoint);

  if (!o.audio.empty() || o.prompt) {
    if (o.audio.empty() || !o.prompt) throw UsageError("single-pair scoring needs both --audio and --prompt");
    require_file(o.audio, "audio file");
    out << format_score(ckpt.model.score(read_wav(o.audio), o.transcript, *o.prompt)) << "\n";
    return kExitOk;
  }

  const auto mpath = manifest_path(o, c);
  const fs::path vpath = o.variants.empty() ? datagen::corpus_paths(c.data_dir).variants : fs::path(o.variants);
  require_file(mpath, "manifest");
  require_file(vpath, "variants file");
  const auto manifest = read_manifest(mpath);
  const auto sets = datagen::read_variants(vpath);
  const fs::path table_path = o.scores.empty() ? c.reports_dir / "scores.csv" : fs::path(o.scores);
  ensure_dir(parent_or_dot(table_path));
  std::size_t rows = 0;
  {
    stats::ScoreTableWriter writer(table_path);
    score_variant_sets(ckpt.model, manifest, sets, [&](const stats::ScoreRow& r) {
      writer.write(r);
      ++rows;
    });
  }
  write_resolved_config(parent_or_dot(table_path), c);
  out << "items: " << sets.size() << "\nrows: " << rows << "\nscores: " << table_path.string() << "\n";
  return kExitOk;
}

fs::path scores_path(const Options& o, const RunConfig& c) {
  const fs::path p = o.scores.empty() ? c.reports_dir / "scores.csv" : fs::path(o.scores);
  require_file(p, "score table");
  return p;
}

int cmd_eval_faithfulness(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  const auto table = stats::read_score_table(scores_path(o, c));
  const auto report = stats::faithfulness_report(table, c.alpha);
  ensure_dir(c.reports_dir);
  const auto text = stats::format_text(report);
  write_text(c.reports_dir / "faithfulness.txt", text);
  write_text(c.reports_dir / "faithfulness.json", stats::format_json(report));
  write_resolved_config(c.reports_dir, c);
  out << text;
  return kExitOk;
}

int cmd_eval_plausibility(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  const auto table = stats::read_score_table(scores_path(o, c));
  const fs::path mos_path = o.mos.empty() ? c.data_dir / "proxy_mos.csv" : fs::path(o.mos);
  require_file(mos_path, "MOS table");
  const auto mos = stats::read_mos_table(mos_path);
  std::map<std::string, double> scores;
  for (const auto& r : table.rows) {
    if (!scores.emplace(plausibility_key(r), r.score).second) {
      throw DataError("duplicate score row for '" + plausibility_key(r) + "'");
    }
  }
  const auto report = stats::plausibility_report(scores, mos);
  ensure_dir(c.reports_dir);
  const auto text = stats::format_text(report);
  write_text(c.reports_dir / "plausibility.txt", text);
  write_text(c.reports_dir / "plausibility.json", stats::format_json(report));
  write_resolved_config(c.reports_dir, c);
  out << text;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Style-prompt adherence scorer: data generation, training, scoring and evaluation", "spam"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_file, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Run seed (overrides the config)");
  app.add_flag("--deterministic", o.deterministic, "Single-worker, fixed-seed execution");

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  gen->add_option("--out", o.out_dir, "Output directory")->required();
  gen->add_option("--n", o.n_items, "Number of utterances");
  gen->add_option("--spec", o.spec_file, "Generation spec JSON")->check(CLI::ExistingFile);

  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  tr->add_option("--data-dir", o.data_dir, "Corpus directory (manifest.jsonl)");
  tr->add_option("--manifest", o.manifest, "Manifest file (overrides --data-dir)");
  tr->add_option("--checkpoint", o.checkpoint, "Checkpoint output path");
  tr->add_option("--metrics", o.metrics, "Metrics log path (default: next to the checkpoint)");
  tr->add_option("--max-steps", o.max_steps, "Maximum optimizer steps");

  auto* sc = app.add_subcommand("score", "Score one pair or every variant set of a corpus");
  sc->add_option("--checkpoint", o.checkpoint, "Checkpoint to load");
  sc->add_option("--audio", o.audio, "WAV file (single-pair mode)");
  sc->add_option("--transcript", o.transcript, "Transcript of the audio (single-pair mode)");
  sc->add_option("--prompt", o.prompt, "Style prompt (single-pair mode)");
  sc->add_option("--data-dir", o.data_dir, "Corpus directory (batch mode)");
  sc->add_option("--manifest", o.manifest, "Manifest file (batch mode)");
  sc->add_option("--variants", o.variants, "Variants file (batch mode)");
  sc->add_option("--out", o.scores, "Score table output (batch mode)");

  auto* ev = app.add_subcommand("eval", "Evaluate a score table");
  ev->require_subcommand(1);
  auto* faith = ev->add_subcommand("faithfulness", "Adherence rate and paired t-tests");
  faith->add_option("--scores", o.scores, "Score table CSV");
  faith->add_option("--alpha", o.alpha, "Significance level");
  faith->add_option("--out-dir", o.reports_dir, "Report directory");
  auto* plaus = ev->add_subcommand("plausibility", "Correlation with MOS");
  plaus->add_option("--scores", o.scores, "Score table CSV");
  plaus->add_option("--mos", o.mos, "MOS table CSV");
  plaus->add_option("--out-dir", o.reports_dir, "Report directory");
  plaus->add_option("--data-dir", o.data_dir, "Corpus directory holding proxy_mos.csv");

  std::vector<std::string> argv_storage = {"spam"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (sc->parsed()) return cmd_score(o, out);
    if (faith->parsed()) return cmd_eval_faithfulness(o, out);
    if (plaus->parsed()) return cmd_eval_plausibility(o, out);
    err << "error: no command given\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace spam::cli
