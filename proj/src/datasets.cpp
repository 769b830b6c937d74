#include "lcw/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "lcw/error.hpp"
#include "lcw/random.hpp"

namespace lcw::data {

namespace fs = std::filesystem;

Tensor Dataset::train() const {
  if (train_indices.empty()) return points;
  return take_rows(points, train_indices);
}

Tensor Dataset::validation() const {
  if (validation_indices.empty()) return points;
  return take_rows(points, validation_indices);
}

Dataset gaussian_ring(std::size_t k_modes, double radius, double std_dev, std::size_t n,
                      std::uint64_t seed) {
  if (k_modes == 0) throw DataError("gaussian_ring needs at least one mode");
  if (n == 0) throw DataError("gaussian_ring needs n >= 1");
  Dataset ds;
  ds.name = "ring";
  Tensor centers = Tensor::zeros({k_modes, 2});
  for (std::size_t j = 0; j < k_modes; ++j) {
    double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(k_modes);
    centers(j, 0) = radius * std::cos(angle);
    centers(j, 1) = radius * std::sin(angle);
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, k_modes - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  ds.points = Tensor::zeros({n, 2});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = pick(rng);
    ds.labels[i] = static_cast<int>(j);
    ds.points(i, 0) = centers(j, 0) + std_dev * noise(rng);
    ds.points(i, 1) = centers(j, 1) + std_dev * noise(rng);
  }
  ds.centers = std::move(centers);
  return ds;
}

Dataset two_moons(std::size_t n, double noise_std, std::uint64_t seed) {
  if (n == 0) throw DataError("two_moons needs n >= 1");
  Dataset ds;
  ds.name = "moons";
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  ds.points = Tensor::zeros({n, 2});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = angle(rng);
    const bool lower = i % 2 == 1;
    double x = lower ? 1.0 - std::cos(t) : std::cos(t);
    double y = lower ? 0.5 - std::sin(t) : std::sin(t);
    if (noise_std > 0.0) {
      x += noise_std * noise(rng);
      y += noise_std * noise(rng);
    }
    ds.points(i, 0) = x;
    ds.points(i, 1) = y;
    ds.labels[i] = lower ? 1 : 0;
  }
  return ds;
}

Dataset checkerboard(std::size_t n, std::size_t grid, std::uint64_t seed) {
  if (n == 0 || grid == 0) throw DataError("checkerboard needs n >= 1 and grid >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      if ((i + j) % 2 == 0) cells.emplace_back(i, j);
    }
  }
  const double origin = -static_cast<double>(grid) / 2.0;
  Dataset ds;
  ds.name = "checkerboard";
  Tensor centers = Tensor::zeros({cells.size(), 2});
  for (std::size_t c = 0; c < cells.size(); ++c) {
    centers(c, 0) = origin + static_cast<double>(cells[c].first) + 0.5;
    centers(c, 1) = origin + static_cast<double>(cells[c].second) + 0.5;
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ds.points = Tensor::zeros({n, 2});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = pick(rng);
    ds.points(i, 0) = origin + static_cast<double>(cells[c].first) + unit(rng);
    ds.points(i, 1) = origin + static_cast<double>(cells[c].second) + unit(rng);
    ds.labels[i] = static_cast<int>(c);
  }
  ds.centers = std::move(centers);
  return ds;
}

namespace {

// Orthonormal dim x dim matrix from Gram-Schmidt on a Gaussian matrix.
Tensor random_rotation(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Tensor q = normal_matrix(dim, dim, rng);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double dot = 0.0;
      for (std::size_t r = 0; r < dim; ++r) dot += q(r, c) * q(r, p);
      for (std::size_t r = 0; r < dim; ++r) q(r, c) -= dot * q(r, p);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < dim; ++r) norm += q(r, c) * q(r, c);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < dim; ++r) q(r, c) /= norm;
  }
  return q;
}

Tensor pad_and_rotate(const Tensor& pts, const Tensor& rotation) {
  const std::size_t dim = rotation.rows();
  Tensor padded = Tensor::zeros({pts.rows(), dim});
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    for (std::size_t j = 0; j < pts.cols(); ++j) padded(i, j) = pts(i, j);
  }
  return matmul_raw(padded, rotation);
}

}  // namespace

Dataset embed_rotated(const Dataset& ds, std::size_t dim, std::uint64_t seed) {
  if (dim < ds.dim()) throw DataError("embedding dimension is smaller than the data dimension");
  Tensor rotation = random_rotation(dim, seed);
  Dataset out = ds;
  out.name = ds.name + std::to_string(dim);
  out.points = pad_and_rotate(ds.points, rotation);
  if (ds.centers) out.centers = pad_and_rotate(*ds.centers, rotation);
  return out;
}

namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const fs::path& path) {
  if (offset + 4 > bytes.size()) throw FormatError("truncated IDX header in " + path.string());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

}  // namespace

Dataset load_idx(const fs::path& images, const std::optional<fs::path>& labels,
                 std::optional<std::size_t> limit) {
  const auto bytes = read_file(images);
  const std::uint32_t magic = read_be32(bytes, 0, images);
  if (magic != kIdxImages) {
    std::ostringstream os;
    os << "bad IDX image magic 0x" << std::hex << magic << " in " << images.string();
    throw FormatError(os.str());
  }
  const std::size_t count = read_be32(bytes, 4, images);
  const std::size_t rows = read_be32(bytes, 8, images);
  const std::size_t cols = read_be32(bytes, 12, images);
  if (count == 0 || rows == 0 || cols == 0) throw FormatError("empty IDX image file");
  const std::size_t pixels = rows * cols;
  if (bytes.size() < 16 + count * pixels) {
    throw FormatError("truncated IDX image payload in " + images.string() + ": expected " +
                      std::to_string(16 + count * pixels) + " bytes, found " +
                      std::to_string(bytes.size()));
  }
  const std::size_t keep = limit ? std::min(*limit, count) : count;
  if (keep == 0) throw DataError("IDX limit selects no records");

  Dataset ds;
  ds.name = images.stem().string();
  ds.image_shape = std::make_pair(rows, cols);
  ds.points = Tensor::zeros({keep, pixels});
  for (std::size_t k = 0; k < keep * pixels; ++k) ds.points.data[k] = bytes[16 + k] / 255.0;

  if (labels) {
    const auto lbytes = read_file(*labels);
    const std::uint32_t lmagic = read_be32(lbytes, 0, *labels);
    if (lmagic != kIdxLabels) {
      std::ostringstream os;
      os << "bad IDX label magic 0x" << std::hex << lmagic << " in " << labels->string();
      throw FormatError(os.str());
    }
    const std::size_t lcount = read_be32(lbytes, 4, *labels);
    if (lbytes.size() < 8 + lcount) throw FormatError("truncated IDX label payload");
    if (lcount < keep) throw FormatError("IDX label file has fewer records than the image file");
    ds.labels.resize(keep);
    for (std::size_t i = 0; i < keep; ++i) ds.labels[i] = lbytes[8 + i];
  }
  return ds;
}

void write_idx_images(const fs::path& path, const Tensor& images, std::size_t rows,
                      std::size_t cols) {
  if (images.cols() != rows * cols) throw ShapeError("image tensor width differs from rows*cols");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  put_be32(out, kIdxImages);
  put_be32(out, static_cast<std::uint32_t>(images.rows()));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  std::vector<char> buf(images.size());
  for (std::size_t k = 0; k < images.size(); ++k) {
    double v = std::clamp(images.data[k], 0.0, 1.0);
    buf[k] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_idx_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  put_be32(out, kIdxLabels);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) out.put(static_cast<char>(l));
}

Dataset split(Dataset ds, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw DataError("validation fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(validation_fraction * n));
  n_val = std::clamp<std::size_t>(n_val, 1, n > 1 ? n - 1 : 1);
  ds.validation_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  ds.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return ds;
}

Tensor read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t count = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw FormatError("bad number on line " + std::to_string(rows + 1) + " of " +
                          path.string());
      }
      values.push_back(v);
      ++count;
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end) {
        if (*p != ',') throw FormatError("expected ',' in " + path.string());
        ++p;
      }
    }
    if (rows == 0) cols = count;
    if (count != cols) throw FormatError("ragged CSV row in " + path.string());
    ++rows;
  }
  if (rows == 0) throw DataError("no points in " + path.string());
  return Tensor::matrix(rows, cols, std::move(values));
}

void write_csv(const fs::path& path, const Tensor& points) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::array<char, 64> buf{};
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t j = 0; j < points.cols(); ++j) {
      if (j) out << ',';
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), points(i, j));
      out.write(buf.data(), ptr - buf.data());
    }
    out << '\n';
  }
}

namespace {

constexpr std::array<char, 4> kRawMagic{'L', 'C', 'W', 'B'};

std::uint32_t read_le32(const std::vector<unsigned char>& b, std::size_t off) {
  return std::uint32_t{b[off]} | (std::uint32_t{b[off + 1]} << 8) |
         (std::uint32_t{b[off + 2]} << 16) | (std::uint32_t{b[off + 3]} << 24);
}

void put_le32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v), static_cast<char>(v >> 8),
                              static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(b.data(), 4);
}

}  // namespace

Tensor read_raw(const fs::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kRawMagic.data(), 4) != 0) {
    throw FormatError("not an LCWB point file: " + path.string());
  }
  const std::size_t n = read_le32(bytes, 4);
  const std::size_t d = read_le32(bytes, 8);
  if (n == 0 || d == 0) throw FormatError("empty LCWB point file: " + path.string());
  if (bytes.size() < 16 + 4 * n * d) throw FormatError("truncated LCWB payload in " + path.string());
  std::vector<double> values(n * d);
  for (std::size_t k = 0; k < n * d; ++k) {
    std::uint32_t bits = read_le32(bytes, 16 + 4 * k);
    float f;
    std::memcpy(&f, &bits, 4);
    values[k] = f;
  }
  return Tensor::matrix(n, d, std::move(values));
}

void write_raw(const fs::path& path, const Tensor& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kRawMagic.data(), 4);
  put_le32(out, static_cast<std::uint32_t>(points.rows()));
  put_le32(out, static_cast<std::uint32_t>(points.cols()));
  put_le32(out, 0);
  for (double v : points.data) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_le32(out, bits);
  }
}

Tensor read_points(const fs::path& path) {
  if (path.extension() == ".bin") return read_raw(path);
  return read_csv(path);
}

}  // namespace lcw::data
