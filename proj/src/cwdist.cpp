#include "lcw/cwdist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lcw/error.hpp"
#include "lcw/random.hpp"

namespace lcw::cw {

namespace {

constexpr double kSigmaFloor = 1e-7;

void check_dim(const Tensor& t, const CwConfig& cfg, const char* what) {
  if (cfg.dim < 2) {
    throw DomainError("Cramer-Wold estimators need dimension >= 2, got " +
                      std::to_string(cfg.dim));
  }
  if (t.cols() != cfg.dim) {
    throw ShapeError(std::string(what) + " has " + std::to_string(t.cols()) +
                     " columns but the distance is configured for dimension " +
                     std::to_string(cfg.dim));
  }
}

// mean_ij (gamma + |a_i - b_j|^2 / (2D - 3))^(-1/2)
ad::Var kernel_mean(const ad::Var& a, const ad::Var& b, double gamma, double denom) {
  auto k = ad::reciprocal(ad::sqrt(ad::shift(ad::scale(ad::pairwise_sq_dists(a, b), 1.0 / denom),
                                             gamma)));
  return ad::mean(k);
}

struct Moments {
  double sum = 0.0;
  std::size_t count = 0;
};

Moments moments(const Tensor& t) {
  Moments m;
  for (double v : t.data) m.sum += v;
  m.count = t.size();
  return m;
}

double centered_sq(const Tensor& t, double mu) {
  double s = 0.0;
  for (double v : t.data) s += (v - mu) * (v - mu);
  return s;
}

}  // namespace

Bandwidth silverman_gamma(std::size_t n, double sigma_hat) {
  if (n == 0) throw DomainError("silverman_gamma needs n >= 1");
  if (!(sigma_hat > 0.0)) throw DomainError("silverman_gamma needs sigma_hat > 0");
  Bandwidth b;
  b.n = n;
  b.sigma_hat = sigma_hat;
  b.gamma = sigma_hat * std::pow(4.0 / (3.0 * static_cast<double>(n)), 0.4);
  return b;
}

double pooled_sigma(const Tensor& x, const Tensor& y) {
  if (x.size() && y.size() && x.cols() != y.cols()) {
    throw ShapeError("pooled_sigma dimension mismatch: " + shape_string(x.shape) + " vs " +
                     shape_string(y.shape));
  }
  const std::size_t points = (x.size() ? x.rows() : 0) + (y.size() ? y.rows() : 0);
  if (points < 2) throw DataError("pooled_sigma needs at least two points in total");
  // Sums are formed per sample and then combined so swapping x and y gives
  // the identical floating-point result.
  const Moments mx = moments(x);
  const Moments my = moments(y);
  const double count = static_cast<double>(mx.count + my.count);
  const double mu = (mx.sum + my.sum) / count;
  const double var = (centered_sq(x, mu) + centered_sq(y, mu)) / count;
  return std::max(std::sqrt(var), kSigmaFloor);
}

ad::Var cw2_to_gaussian(const ad::Var& z, const CwConfig& cfg) {
  check_dim(z.value(), cfg, "latent sample");
  const std::size_t n = z.rows();
  const double gamma = silverman_gamma(n, 1.0).gamma;
  const double denom = 2.0 * static_cast<double>(cfg.dim) - 3.0;

  auto self_term = kernel_mean(z, z, gamma, denom);
  auto norms = ad::sum(ad::square(z), 1);
  auto cross = ad::mean(
      ad::reciprocal(ad::sqrt(ad::shift(ad::scale(norms, 1.0 / denom), gamma + 0.5))));
  const double prior_term = 1.0 / std::sqrt(1.0 + gamma);
  auto total = ad::sub(ad::shift(self_term, prior_term), ad::scale(cross, 2.0));
  return ad::scale(total, 1.0 / (2.0 * std::sqrt(std::numbers::pi)));
}

Bandwidth two_sample_bandwidth(const Tensor& x, const Tensor& y, const CwConfig& cfg) {
  const double sigma = cfg.sigma_mode == SigmaMode::pooled ? pooled_sigma(x, y) : 1.0;
  return silverman_gamma(x.rows(), sigma);
}

ad::Var cw2_two_samples(const ad::Var& x, const ad::Var& y, const CwConfig& cfg) {
  check_dim(x.value(), cfg, "first sample");
  check_dim(y.value(), cfg, "second sample");
  if (x.rows() != y.rows()) {
    throw ShapeError("cw2_two_samples needs equal sample counts, got " + std::to_string(x.rows()) +
                     " and " + std::to_string(y.rows()));
  }
  const double gamma = two_sample_bandwidth(x.value(), y.value(), cfg).gamma;
  const double denom = 2.0 * static_cast<double>(cfg.dim) - 3.0;

  auto kxx = kernel_mean(x, x, gamma, denom);
  auto kyy = kernel_mean(y, y, gamma, denom);
  // Both cross orientations are evaluated so the expression is symmetric in
  // (x, y) down to the last bit.
  auto kxy = kernel_mean(x, y, gamma, denom);
  auto kyx = kernel_mean(y, x, gamma, denom);
  auto total = ad::sub(ad::add(kxx, kyy), ad::add(kxy, kyx));
  return ad::scale(total, 1.0 / (2.0 * std::sqrt(std::numbers::pi)));
}

ad::Var log_cw(const ad::Var& d2, const CwConfig& cfg) { return ad::log_clamped(d2, cfg.log_eps); }

ad::Var sliced_wasserstein(const ad::Var& x, const ad::Var& y, std::size_t num_dirs,
                           std::uint64_t seed) {
  if (x.cols() != y.cols()) {
    throw ShapeError("sliced_wasserstein dimension mismatch: " + shape_string(x.value().shape) +
                     " vs " + shape_string(y.value().shape));
  }
  if (x.rows() != y.rows()) {
    throw ShapeError("sliced_wasserstein needs equal sample counts, got " +
                     std::to_string(x.rows()) + " and " + std::to_string(y.rows()));
  }
  if (num_dirs == 0) throw DomainError("sliced_wasserstein needs at least one direction");
  Rng rng(seed);
  auto dirs = ad::constant(unit_directions(x.cols(), num_dirs, rng));
  auto px = ad::sort_columns(ad::matmul(x, dirs));
  auto py = ad::sort_columns(ad::matmul(y, dirs));
  return ad::mean(ad::square(ad::sub(px, py)));
}

}  // namespace lcw::cw
