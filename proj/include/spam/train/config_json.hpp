#pragma once

#include <json.hpp>

#include "spam/train/trainer.hpp"

namespace spam::train {

/// JSON forms of the hyperparameter records. Parsing starts from the
/// defaults, overrides the keys present and throws UsageError for unknown
/// keys or values of the wrong type.
nlohmann::json to_json(const model::ModelConfig& c);
nlohmann::json to_json(const LossWeights& w);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const AuxNormalizer& a);

model::ModelConfig model_config_from_json(const nlohmann::json& j, model::ModelConfig base = {});
LossWeights loss_weights_from_json(const nlohmann::json& j, LossWeights base = {});
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
AuxNormalizer aux_normalizer_from_json(const nlohmann::json& j);

}  // namespace spam::train
