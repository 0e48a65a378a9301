#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "spam/train/trainer.hpp"

namespace spam::cli {

/// Everything a run reads from the config file. JSON layout and defaults:
///
///   {
///     "seed": 0,
///     "deterministic": false,
///     "paths": {"data_dir": "data", "checkpoint": "model.ckpt", "reports_dir": "reports"},
///     "model": {"h": 64, "heads": 4, "layers": 2, "dropout": 0.1},
///     "loss":  {"lambda_c": 1.0, "lambda_p": 0.1, "lambda_v": 0.1, "lambda_e": 0.1,
///               "temperature": 0.07, "huber_delta": 1.0},
///     "train": {"batch_size": 32, "lr": 0.0003, "weight_decay": 0.01, "warmup_steps": 100,
///               "max_steps": 20000, "clip_norm": 1.0, "eval_every": 50, "patience": 10,
///               "dev_batches": 8},
///     "eval":  {"alpha": 0.05}
///   }
///
/// Every key is optional; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path data_dir = "data";
  std::filesystem::path checkpoint = "model.ckpt";
  std::filesystem::path reports_dir = "reports";
  train::TrainConfig train;
  double alpha = 0.05;
  bool deterministic = false;

  /// The training config with the run seed applied to sampling and init.
  train::TrainConfig resolved_train() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
/// Throws DataError when the file is unreadable or not JSON.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace spam::cli
