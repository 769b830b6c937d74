#pragma once

// Command implementations behind the `lcw` executable. Each throws an
// lcw::Error subclass on failure; exit_code_for() maps those to the
// process exit status.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lcw/training.hpp"

namespace lcw::cli {

namespace fs = std::filesystem;

/// 2 config, 3 data or file format, 4 incompatible dims or missing network,
/// 1 anything else.
int exit_code_for(const std::exception& e);

/// Header plus one row per record; absent scores are empty fields.
void write_metrics_csv(const fs::path& path, const std::vector<train::MetricsRecord>& history,
                       const std::string& frechet_column);

/// "name.ckpt.json" -> "name"; otherwise the path without its extension.
fs::path artifact_stem(const fs::path& ckpt);

struct Stage1Args {
  fs::path config;
  std::optional<std::string> objective;
  std::optional<fs::path> out;
  bool no_wall_time = false;
};
fs::path cmd_train_stage1(const Stage1Args& args, std::ostream& log);

struct Stage2Args {
  fs::path ckpt;
  fs::path config;
  std::optional<fs::path> out;
  bool no_wall_time = false;
};
fs::path cmd_train_stage2(const Stage2Args& args, std::ostream& log);

struct GeneratorArgs {
  fs::path config;
  std::optional<std::string> distance;
  std::optional<std::size_t> sw_dirs;
  std::optional<fs::path> out;
  bool no_wall_time = false;
};
fs::path cmd_train_generator(const GeneratorArgs& args, std::ostream& log);

struct SampleArgs {
  fs::path ckpt;
  std::size_t n = 1000;
  std::string path = "lcw";
  std::uint64_t seed = 0;
  std::optional<fs::path> out;
};
/// Writes <out>.bin plus an SVG scatter for 2-D data or a PGM grid for images.
fs::path cmd_sample(const SampleArgs& args, std::ostream& log);

struct InterpolateArgs {
  fs::path ckpt;
  std::string mode = "density";
  std::size_t steps = 10;
  std::uint64_t seed = 0;
  std::optional<fs::path> out;
};
/// Writes <out>.bin (decoded path), <out>.csv (per-step metrics), an SVG of
/// both latent paths for 2-D latents and a PGM grid for images.
fs::path cmd_interpolate(const InterpolateArgs& args, std::ostream& log);

struct EvalArgs {
  fs::path ckpt;
  std::string data;
  std::uint64_t seed = 0;
  std::optional<std::size_t> samples;
  std::optional<fs::path> out;
};
/// Appends one labeled row to <out> (default <ckpt stem>.eval.csv).
fs::path cmd_eval(const EvalArgs& args, std::ostream& log);

struct DistArgs {
  fs::path a;
  std::optional<fs::path> b;
  std::string metric = "cw";
  bool gaussian = false;
  std::size_t sw_dirs = 1000;
  std::uint64_t seed = 0;
};
double compute_dist(const DistArgs& args);
/// Nine significant digits; exact zero prints as 0.000000000.
std::string format_dist(double v);

}  // namespace lcw::cli
