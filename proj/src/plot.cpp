#include "lcw/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "lcw/error.hpp"

namespace lcw::plot {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string svg_scatter(const std::vector<Series>& series, const std::string& title,
                        std::size_t size) {
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (const auto& s : series) {
    if (s.points.size() && s.points.cols() < 2)
      throw ShapeError("scatter needs at least 2 columns, got " + shape_string(s.points.shape));
    for (std::size_t i = 0; i < s.points.rows() && s.points.size(); ++i) {
      double x = s.points(i, 0), y = s.points(i, 1);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
      lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
    }
  }
  if (!(lo_x <= hi_x)) lo_x = -1, hi_x = 1, lo_y = -1, hi_y = 1;
  // Equal aspect, with a margin.
  double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9}) * 1.1;
  double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  const double pad = 24.0, inner = static_cast<double>(size) - 2 * pad;
  auto px = [&](double x) { return pad + ((x - cx) / span + 0.5) * inner; };
  auto py = [&](double y) { return pad + (0.5 - (y - cy) / span) * inner; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << size
    << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n"
    << "<title>" << escape(title) << "</title>\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size
    << "\" fill=\"white\"/>\n"
    << "<text x=\"" << pad << "\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">"
    << escape(title) << "</text>\n";
  for (const auto& s : series) {
    o << "<g fill=\"" << escape(s.color) << "\" stroke=\"none\"";
    if (!s.label.empty()) o << " id=\"" << escape(s.label) << "\"";
    o << ">\n";
    if (s.path && s.points.size() && s.points.rows() > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << escape(s.color) << "\" stroke-width=\"1\" points=\"";
      for (std::size_t i = 0; i < s.points.rows(); ++i)
        o << (i ? " " : "") << fmt(px(s.points(i, 0))) << ',' << fmt(py(s.points(i, 1)));
      o << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.points.rows() && s.points.size(); ++i) {
      double x = s.points(i, 0), y = s.points(i, 1);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      o << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y)) << "\" r=\"" << s.radius
        << "\"/>\n";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::filesystem::path& path, const std::vector<Series>& series,
               const std::string& title) {
  write_text(path, svg_scatter(series, title));
}

std::string pgm_grid(const Tensor& images, std::size_t rows, std::size_t cols,
                     std::size_t per_row) {
  if (rows == 0 || cols == 0 || per_row == 0) throw ShapeError("empty PGM tile layout");
  const std::size_t n = images.size() ? images.rows() : 0;
  if (n == 0) throw DataError("no images to tile");
  if (images.cols() != rows * cols)
    throw ShapeError("image rows have " + std::to_string(images.cols()) + " values, expected " +
                     std::to_string(rows * cols));
  const std::size_t grid_cols = std::min(per_row, n);
  const std::size_t grid_rows = (n + per_row - 1) / per_row;
  const std::size_t width = grid_cols * cols, height = grid_rows * rows;
  std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::string pixels(width * height, '\0');
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t gy = k / per_row, gx = k % per_row;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        double v = images(k, r * cols + c);
        if (!std::isfinite(v)) v = 0;
        v = std::clamp(v, 0.0, 1.0);
        pixels[(gy * rows + r) * width + gx * cols + c] =
            static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
  }
  return header + pixels;
}

void write_pgm(const std::filesystem::path& path, const Tensor& images, std::size_t rows,
               std::size_t cols, std::size_t per_row) {
  write_text(path, pgm_grid(images, rows, cols, per_row));
}

}  // namespace lcw::plot
