#pragma once

// Reference computations used only by tests: sliced Monte-Carlo versions of
// the Cramer-Wold distances and a scalar Frechet formula.

#include <cstddef>
#include <cstdint>

#include "lcw/tensor.hpp"

namespace lcw::testing {

/// Mean over random unit directions of the squared L2 distance between the
/// gamma-smoothed 1-D projections of x and y, integrated exactly.
double sliced_cw_oracle(const Tensor& x, const Tensor& y, double gamma, std::size_t num_dirs,
                        std::uint64_t seed);

/// Same against N(0, I), whose projections are N(0, 1).
double sliced_cw_gaussian_oracle(const Tensor& z, double gamma, std::size_t num_dirs,
                                 std::uint64_t seed);

/// Per-direction value of the Gaussian oracle for given projections.
double gaussian_oracle_direction(const double* a, std::size_t n, double gamma);

/// Per-direction value of the two-sample oracle.
double two_sample_oracle_direction(const double* a, std::size_t n, const double* b, std::size_t m,
                                   double gamma);

}  // namespace lcw::testing
