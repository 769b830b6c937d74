#pragma once

// Run configuration files: flat `key = value` lines, optionally grouped under
// one level of `[section]` headers. `#` starts a comment; string values may
// be quoted. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "lcw/datasets.hpp"
#include "lcw/training.hpp"

namespace lcw::cli {

/// section -> key -> raw value; top-level keys live in section "".
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

RawConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RawConfig parse_config_file(const std::filesystem::path& path);

struct DataConfig {
  std::string preset;  // ring, ring16, moons, checkerboard, mnist, fashion, file
  std::string path;    // images (IDX) or points (csv/bin)
  std::string labels_path;
  std::optional<std::size_t> limit;
  double validation_fraction = 0.1;
  std::size_t n = 5000;
  std::size_t modes = 8;
  double radius = 5.0;
  double std_dev = 0.2;
  double noise_std = 0.05;
  std::size_t grid = 4;
  std::size_t embed_dim = 16;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  std::size_t samples = 10000;
  double coverage_radius = 0.0;
  double min_mode_fraction = 0.01;
  bool frechet = true;
};

struct RunConfig {
  std::string name;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;
  DataConfig data;
  train::TrainConfig stage1;
  train::TrainConfig stage2;
  train::TrainConfig generator;
  EvalConfig eval;
};

/// Preset defaults, then the entries of `raw`. Throws ConfigError naming the
/// offending key on unknown keys or bad values.
RunConfig build_run_config(const RawConfig& raw);
RunConfig load_run_config(const std::filesystem::path& path);

/// Materializes the dataset a config describes, split into train/validation.
data::Dataset load_dataset(const DataConfig& cfg);

/// True for presets producing images (PGM output, sigmoid decoders).
bool is_image_preset(const std::string& preset);

}  // namespace lcw::cli
