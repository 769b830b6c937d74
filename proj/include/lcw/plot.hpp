#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "lcw/tensor.hpp"

namespace lcw::plot {

struct Series {
  Tensor points;  // n x 2 (extra columns ignored)
  std::string color = "#1f77b4";
  std::string label;
  double radius = 1.2;
  /// Draw as a connected polyline with markers instead of a scatter.
  bool path = false;
};

/// SVG 1.1 document with a shared bounding box for all series.
std::string svg_scatter(const std::vector<Series>& series, const std::string& title,
                        std::size_t size = 480);
void write_svg(const std::filesystem::path& path, const std::vector<Series>& series,
               const std::string& title);

/// Binary PGM (P5) of the rows of `images`, each rows x cols with values in
/// [0, 1], tiled `per_row` images per grid row.
std::string pgm_grid(const Tensor& images, std::size_t rows, std::size_t cols,
                     std::size_t per_row = 10);
void write_pgm(const std::filesystem::path& path, const Tensor& images, std::size_t rows,
               std::size_t cols, std::size_t per_row = 10);

}  // namespace lcw::plot
