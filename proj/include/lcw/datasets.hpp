#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcw/tensor.hpp"

namespace lcw::data {

struct Dataset {
  std::string name;
  Tensor points;                    // n x D
  std::vector<int> labels;          // empty when unlabeled
  std::optional<Tensor> centers;    // k x D mode centers (synthetic only)
  std::optional<std::pair<std::size_t, std::size_t>> image_shape;  // rows, cols
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;

  std::size_t size() const { return points.rows(); }
  std::size_t dim() const { return points.cols(); }
  /// Training rows; the whole dataset when no split has been made.
  Tensor train() const;
  /// Validation rows; the whole dataset when no split has been made.
  Tensor validation() const;
};

/// k equal-weight isotropic Gaussians centred at angles 2*pi*j/k on a circle.
Dataset gaussian_ring(std::size_t k_modes, double radius, double std_dev, std::size_t n,
                      std::uint64_t seed);

/// Two interleaved half circles: the upper arc of the unit circle and the
/// lower arc shifted to (1, 0.5), plus isotropic noise.
Dataset two_moons(std::size_t n, double noise_std, std::uint64_t seed);

/// Uniform points on the dark cells of a grid x grid board spanning
/// [-grid/2, grid/2]^2; cell (i, j) is dark when i + j is even.
Dataset checkerboard(std::size_t n, std::size_t grid, std::uint64_t seed);

/// Zero-pads 2-D points to `dim` columns and applies a fixed random rotation
/// (seeded). Centers are mapped the same way.
Dataset embed_rotated(const Dataset& ds, std::size_t dim, std::uint64_t seed);

/// MNIST-style IDX files. Images: magic 0x00000803, pixels scaled by 1/255
/// and flattened. Labels: magic 0x00000801. `limit` keeps the first records.
Dataset load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels = std::nullopt,
                 std::optional<std::size_t> limit = std::nullopt);

/// Writes an IDX image file (u8 pixels) from values in [0, 1].
void write_idx_images(const std::filesystem::path& path, const Tensor& images, std::size_t rows,
                      std::size_t cols);
void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& labels);

/// Seeded shuffle split; validation gets round(fraction * n) points.
Dataset split(Dataset ds, double validation_fraction, std::uint64_t seed);

/// One point per line, comma-separated decimal values.
Tensor read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Tensor& points);

/// Raw float32 little-endian: "LCWB", u32 n, u32 D, u32 reserved (0), data.
Tensor read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const Tensor& points);

/// Chooses read_raw or read_csv by extension (.bin / anything else).
Tensor read_points(const std::filesystem::path& path);

}  // namespace lcw::data
