#pragma once

// Closed-form Cramer-Wold distance estimators.
//
// Both estimators return d^2_CW including the leading 1/(2 sqrt(pi)) factor
// and are built from autodiff primitives, so they can sit inside a loss.
// Kernel: k(a, b) = (gamma + |a - b|^2 / (2D - 3))^(-1/2).

#include <cstddef>
#include <cstdint>

#include "lcw/autodiff.hpp"
#include "lcw/tensor.hpp"

namespace lcw::cw {

struct Bandwidth {
  double gamma = 0.0;
  double sigma_hat = 0.0;
  std::size_t n = 0;
};

enum class SigmaMode { unit, pooled };

struct CwConfig {
  std::size_t dim = 2;
  SigmaMode sigma_mode = SigmaMode::pooled;
  double log_eps = 1e-9;
};

/// gamma_n = sigma_hat * (4 / (3n))^(2/5).
Bandwidth silverman_gamma(std::size_t n, double sigma_hat);

/// Population standard deviation of every coordinate of every point in
/// x and y taken together, floored at 1e-7. An empty Tensor counts as an
/// empty sample. The result does not depend on argument order.
double pooled_sigma(const Tensor& x, const Tensor& y);

/// d^2_CW(Z, N(0, I)) with gamma from silverman_gamma(n, 1).
ad::Var cw2_to_gaussian(const ad::Var& z, const CwConfig& cfg);

/// d^2_CW(X, Y) for equally sized samples. The cross term uses 2/n^2 so
/// that d^2(X, X) vanishes. The bandwidth is a constant of the batch: with
/// SigmaMode::pooled it comes from pooled_sigma(x, y), otherwise sigma = 1.
ad::Var cw2_two_samples(const ad::Var& x, const ad::Var& y, const CwConfig& cfg);

/// Bandwidth cw2_two_samples would use for these inputs.
Bandwidth two_sample_bandwidth(const Tensor& x, const Tensor& y, const CwConfig& cfg);

/// log(max(d2, cfg.log_eps)).
ad::Var log_cw(const ad::Var& d2, const CwConfig& cfg);

/// Mean over `num_dirs` random unit directions of the squared 1-D
/// Wasserstein-2 distance between projected samples.
ad::Var sliced_wasserstein(const ad::Var& x, const ad::Var& y, std::size_t num_dirs,
                           std::uint64_t seed);

}  // namespace lcw::cw
