#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "spam/model/spam_model.hpp"
#include "spam/train/trainer.hpp"

namespace spam::train {

/// Binary layout, little-endian:
///   "SPAMCKPT"                      8 bytes
///   format version                  u32
///   config length, config JSON      u64, bytes (model, train, aux, vocabulary)
///   parameter count                 u32
///   per parameter: name length u32, name, frozen u8, rows u64, cols u64,
///                  rows*cols float32 values (row-major)
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::SpamModel model;
  AuxNormalizer aux;
  TrainConfig config;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws DataError for a corrupt or truncated buffer or an unknown version.
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// Writes to a temporary file and renames it into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spam::train
