#include "spam/train/config_json.hpp"

#include <set>
#include <string>

#include "spam/core/error.hpp"

namespace spam::train {

using nlohmann::json;

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw UsageError(std::string(what) + " must be a JSON object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw UsageError(std::string("unknown ") + what + " key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has the wrong type");
  }
  if constexpr (std::is_unsigned_v<T>) {
    if (!j.at(key).is_number_unsigned()) throw UsageError(std::string("config key '") + key + "' must be >= 0");
  }
}

}  // namespace

json to_json(const model::ModelConfig& c) {
  return {{"h", c.width}, {"heads", c.heads}, {"layers", c.prompt_layers}, {"dropout", c.dropout},
          {"init_seed", c.init_seed}};
}

json to_json(const LossWeights& w) {
  return {{"lambda_c", w.lambda_c},       {"lambda_p", w.lambda_p},
          {"lambda_v", w.lambda_v},       {"lambda_e", w.lambda_e},
          {"temperature", w.temperature}, {"huber_delta", w.huber_delta}};
}

json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"lr", c.learning_rate},   {"weight_decay", c.weight_decay},
          {"warmup_steps", c.warmup_steps}, {"max_steps", c.max_steps}, {"clip_norm", c.clip_norm},
          {"eval_every", c.eval_every}, {"patience", c.patience},   {"dev_batches", c.dev_batches},
          {"seed", c.seed},             {"model", to_json(c.model)}, {"loss", to_json(c.loss)}};
}

json to_json(const AuxNormalizer& a) {
  return {{"pitch_mean", a.pitch_mean},   {"pitch_std", a.pitch_std}, {"speed_mean", a.speed_mean},
          {"speed_std", a.speed_std},     {"energy_mean", a.energy_mean}, {"energy_std", a.energy_std}};
}

model::ModelConfig model_config_from_json(const json& j, model::ModelConfig c) {
  require_keys(j, {"h", "heads", "layers", "dropout", "init_seed"}, "model");
  read(j, "h", c.width);
  read(j, "heads", c.heads);
  read(j, "layers", c.prompt_layers);
  read(j, "dropout", c.dropout);
  read(j, "init_seed", c.init_seed);
  return c;
}

LossWeights loss_weights_from_json(const json& j, LossWeights w) {
  require_keys(j, {"lambda_c", "lambda_p", "lambda_v", "lambda_e", "temperature", "huber_delta"}, "loss");
  read(j, "lambda_c", w.lambda_c);
  read(j, "lambda_p", w.lambda_p);
  read(j, "lambda_v", w.lambda_v);
  read(j, "lambda_e", w.lambda_e);
  read(j, "temperature", w.temperature);
  read(j, "huber_delta", w.huber_delta);
  return w;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  require_keys(j,
               {"batch_size", "lr", "weight_decay", "warmup_steps", "max_steps", "clip_norm", "eval_every",
                "patience", "dev_batches", "seed", "model", "loss"},
               "train");
  read(j, "batch_size", c.batch_size);
  read(j, "lr", c.learning_rate);
  read(j, "weight_decay", c.weight_decay);
  read(j, "warmup_steps", c.warmup_steps);
  read(j, "max_steps", c.max_steps);
  read(j, "clip_norm", c.clip_norm);
  read(j, "eval_every", c.eval_every);
  read(j, "patience", c.patience);
  read(j, "dev_batches", c.dev_batches);
  read(j, "seed", c.seed);
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"), c.model);
  if (j.contains("loss")) c.loss = loss_weights_from_json(j.at("loss"), c.loss);
  return c;
}

AuxNormalizer aux_normalizer_from_json(const json& j) {
  require_keys(j, {"pitch_mean", "pitch_std", "speed_mean", "speed_std", "energy_mean", "energy_std"}, "aux");
  AuxNormalizer a;
  read(j, "pitch_mean", a.pitch_mean);
  read(j, "pitch_std", a.pitch_std);
  read(j, "speed_mean", a.speed_mean);
  read(j, "speed_std", a.speed_std);
  read(j, "energy_mean", a.energy_mean);
  read(j, "energy_std", a.energy_std);
  return a;
}

}  // namespace spam::train
