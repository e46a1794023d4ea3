#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mmgest/nn/model.hpp"

namespace mmgest::nn {

inline constexpr std::uint8_t kCheckpointVersion = 1;

struct CheckpointMeta {
  ModelConfig model;
  std::uint64_t train_seed = 0;
  std::uint32_t epoch = 0;      // epochs completed
  std::string config_hash;      // chirp config the data was made with
};

struct Checkpoint {
  CheckpointMeta meta;
  GestureNet model;
};

/// Binary little-endian container; layout is described in README.md.
void save_checkpoint(GestureNet& model, const CheckpointMeta& meta, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mmgest::nn
