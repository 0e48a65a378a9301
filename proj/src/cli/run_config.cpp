#include "spam/cli/run_config.hpp"

#include <fstream>
#include <set>

#include "spam/core/error.hpp"
#include "spam/train/config_json.hpp"

namespace spam::cli {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw UsageError(what + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw UsageError("unknown " + what + " key '" + key + "'");
  }
}

std::filesystem::path path_value(const json& j, const char* key, const std::filesystem::path& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw UsageError(std::string("paths.") + key + " must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace

train::TrainConfig RunConfig::resolved_train() const {
  auto c = train;
  c.seed = seed;
  c.model.init_seed = seed;
  return c;
}

RunConfig run_config_from_json(const json& j) {
  require_keys(j, {"seed", "deterministic", "paths", "model", "loss", "train", "eval"}, "config");
  RunConfig c;
  if (j.contains("deterministic")) {
    if (!j.at("deterministic").is_boolean()) throw UsageError("deterministic must be true or false");
    c.deterministic = j.at("deterministic").get<bool>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw UsageError("seed must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    require_keys(p, {"data_dir", "checkpoint", "reports_dir"}, "paths");
    c.data_dir = path_value(p, "data_dir", c.data_dir);
    c.checkpoint = path_value(p, "checkpoint", c.checkpoint);
    c.reports_dir = path_value(p, "reports_dir", c.reports_dir);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    require_keys(m, {"h", "heads", "layers", "dropout"}, "model");
    c.train.model = train::model_config_from_json(m, c.train.model);
  }
  if (j.contains("loss")) c.train.loss = train::loss_weights_from_json(j.at("loss"), c.train.loss);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    require_keys(t,
                 {"batch_size", "lr", "weight_decay", "warmup_steps", "max_steps", "clip_norm", "eval_every",
                  "patience", "dev_batches"},
                 "train");
    c.train = train::train_config_from_json(t, c.train);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    require_keys(e, {"alpha"}, "eval");
    if (e.contains("alpha")) {
      if (!e.at("alpha").is_number()) throw UsageError("eval.alpha must be a number");
      c.alpha = e.at("alpha").get<double>();
    }
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw UsageError("eval.alpha must be in (0, 1)");
  train::validate(c.train);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
  auto model = train::to_json(c.train.model);
  model.erase("init_seed");
  auto t = train::to_json(c.train);
  t.erase("model");
  t.erase("loss");
  t.erase("seed");
  return {{"seed", c.seed},
          {"deterministic", c.deterministic},
          {"paths",
           {{"data_dir", c.data_dir.string()},
            {"checkpoint", c.checkpoint.string()},
            {"reports_dir", c.reports_dir.string()}}},
          {"model", model},
          {"loss", train::to_json(c.train.loss)},
          {"train", t},
          {"eval", {{"alpha", c.alpha}}}};
}

}  // namespace spam::cli
