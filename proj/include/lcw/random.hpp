#pragma once

#include <cstdint>
#include <random>

#include "lcw/tensor.hpp"

namespace lcw {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent stream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0);

/// rows x cols matrix of independent N(0, 1) draws.
Tensor normal_matrix(std::size_t rows, std::size_t cols, Rng& rng);

/// Unit vectors drawn uniformly on the sphere, stored as the columns of a
/// dim x count matrix.
Tensor unit_directions(std::size_t dim, std::size_t count, Rng& rng);

}  // namespace lcw
