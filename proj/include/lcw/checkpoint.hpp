#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcw/config.hpp"
#include "lcw/nets.hpp"
#include "lcw/training.hpp"

namespace lcw::cli {

inline constexpr const char* kCheckpointFormat = "lcw-ckpt/1";

/// Everything a command needs to resume from or consume a trained model.
struct Checkpoint {
  nets::ModelBundle bundle;
  std::string dataset_preset;
  /// Dataset description the models were trained on.
  DataConfig data;
  std::string run_name;
  std::optional<std::pair<std::size_t, std::size_t>> image_shape;
  std::uint64_t seed = 0;
  /// Stage name ("stage1", "stage2", "generator") -> config used.
  std::map<std::string, train::TrainConfig> configs;
  std::map<std::string, std::vector<train::MetricsRecord>> metrics;
};

/// Versioned JSON with shortest round-trip float text, so load followed by
/// save reproduces the file byte for byte.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lcw::cli
