#include "lcw/random.hpp"

#include <cmath>

namespace lcw {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1) + 0xBF58476D1CE4E5B9ULL * counter;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t = Tensor::zeros({rows, cols});
  for (auto& v : t.data) v = dist(rng);
  return t;
}

Tensor unit_directions(std::size_t dim, std::size_t count, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t = Tensor::zeros({dim, count});
  for (std::size_t c = 0; c < count; ++c) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t r = 0; r < dim; ++r) {
        double v = dist(rng);
        t(r, c) = v;
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < dim; ++r) t(r, c) /= norm;
  }
  return t;
}

}  // namespace lcw
