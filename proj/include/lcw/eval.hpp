#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcw/datasets.hpp"
#include "lcw/nets.hpp"
#include "lcw/tensor.hpp"

namespace lcw::eval {

struct FrechetStats {
  Tensor mean;        // 1 x d
  Tensor covariance;  // d x d, unbiased
  std::size_t samples = 0;
};

FrechetStats fit_gaussian(const Tensor& x);

struct SymmetricEigen {
  std::vector<double> values;
  Tensor vectors;  // eigenvectors in columns
  int sweeps = 0;
};

/// Cyclic Jacobi rotations; stops when the off-diagonal Frobenius norm falls
/// below tol * |S|_F or after max_sweeps sweeps.
SymmetricEigen jacobi_eigen(const Tensor& symmetric, double tol = 1e-12, int max_sweeps = 100);

/// Principal square root of a symmetric PSD matrix; negative eigenvalues
/// are clamped to zero.
Tensor sqrtm_psd(const Tensor& symmetric);

/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), clamped at 0.
/// Covariances get 1e-6 I added when the dimension exceeds the sample count.
double frechet_distance(const FrechetStats& a, const FrechetStats& b);

/// fit_gaussian on both inputs, then frechet_distance.
double frechet_proxy(const Tensor& a, const Tensor& b);

struct ModeCoverage {
  std::vector<std::size_t> counts;
  std::vector<double> fractions;  // of all samples
  std::size_t unassigned = 0;
  /// Modes whose fraction is at least the requested threshold.
  std::size_t covered = 0;
};

/// Assigns each sample to its nearest center when within `radius`.
ModeCoverage mode_coverage(const Tensor& samples, const Tensor& centers, double radius,
                           double min_fraction = 0.0);

enum class InterpolationMode { linear_latent, density_based };

std::string to_string(InterpolationMode m);
InterpolationMode interpolation_mode_from_string(const std::string& s);

struct InterpolationPath {
  Tensor start;  // z'_1, 1 x noise_dim
  Tensor end;    // z'_k
  std::size_t steps = 0;
  InterpolationMode mode = InterpolationMode::density_based;
  std::vector<double> alphas;  // 1 at the start, 0 at the end
  Tensor latent;               // steps x latent_dim
  Tensor decoded;              // steps x data_dim
};

/// linear_latent: a LG(z'_1) + (1 - a) LG(z'_k). density_based:
/// LG(a z'_1 + (1 - a) z'_k). Every point is pushed through the networks on
/// its own, so the endpoints of both modes agree bit for bit.
InterpolationPath interpolate(nets::ModelBundle& bundle, const Tensor& start, const Tensor& end,
                              std::size_t steps, InterpolationMode mode);

/// Mean over path points of the distance to the closest reference point.
double mean_nearest_distance(const Tensor& points, const Tensor& reference);

struct EvalOptions {
  std::size_t generated = 10000;
  std::uint64_t seed = 0;
  /// Mode assignment radius; <= 0 picks a third of the smallest center spacing.
  double coverage_radius = 0.0;
  double min_mode_fraction = 0.01;
  bool frechet = true;
};

struct EvalReport {
  std::optional<double> reconstruction;
  std::optional<double> latent_cw;
  std::optional<double> frechet_prior;
  std::optional<double> frechet_lcw;
  std::optional<std::size_t> modes_covered;
  std::optional<std::size_t> modes_total;
  std::optional<double> min_mode_fraction;
};

/// Reconstruction MSE and latent normality on the validation split, Fréchet
/// proxies of generated samples, and mode coverage when centers are known.
EvalReport eval_suite(nets::ModelBundle& bundle, const data::Dataset& ds,
                      const EvalOptions& opts);

}  // namespace lcw::eval
