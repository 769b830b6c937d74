#include "lcw/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcw/cwdist.hpp"
#include "lcw/error.hpp"
#include "lcw/random.hpp"
#include "lcw/training.hpp"

namespace lcw::eval {

FrechetStats fit_gaussian(const Tensor& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (x.size() == 0 || n < 2) throw DataError("fit_gaussian needs at least two samples");
  FrechetStats s;
  s.samples = n;
  s.mean = Tensor::zeros({1, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean.data[j] += x(i, j);
  }
  for (auto& v : s.mean.data) v /= static_cast<double>(n);
  Tensor centered = x;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered(i, j) -= s.mean.data[j];
  }
  s.covariance = matmul_raw(centered, centered, true, false);
  for (auto& v : s.covariance.data) v /= static_cast<double>(n - 1);
  // exact symmetry
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) s.covariance(j, i) = s.covariance(i, j);
  }
  return s;
}

SymmetricEigen jacobi_eigen(const Tensor& symmetric, double tol, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (symmetric.rank() != 2 || symmetric.cols() != n) {
    throw ShapeError("jacobi_eigen needs a square matrix, got " + shape_string(symmetric.shape));
  }
  Tensor a = symmetric;
  Tensor v = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double total = 0.0;
  for (double x : a.data) total += x * x;
  const double threshold = tol * std::sqrt(total);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    }
    return std::sqrt(s);
  };

  SymmetricEigen out;
  while (out.sweeps < max_sweeps && off_norm() > threshold) {
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  return out;
}

Tensor sqrtm_psd(const Tensor& symmetric) {
  auto eig = jacobi_eigen(symmetric);
  const std::size_t n = symmetric.rows();
  Tensor scaled = eig.vectors;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = std::sqrt(std::max(eig.values[j], 0.0));
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= r;
  }
  Tensor root = matmul_raw(scaled, eig.vectors, false, true);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (root(i, j) + root(j, i));
      root(i, j) = m;
      root(j, i) = m;
    }
  }
  return root;
}

double frechet_distance(const FrechetStats& a, const FrechetStats& b) {
  const std::size_t d = a.mean.cols();
  if (b.mean.cols() != d) {
    throw ShapeError("frechet_distance dimension mismatch: " + std::to_string(d) + " vs " +
                     std::to_string(b.mean.cols()));
  }
  double mean_term = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double t = a.mean.data[j] - b.mean.data[j];
    mean_term += t * t;
  }
  Tensor sa = a.covariance;
  Tensor sb = b.covariance;
  const bool shrink = (a.samples && d > a.samples) || (b.samples && d > b.samples);
  if (shrink) {
    for (std::size_t i = 0; i < d; ++i) {
      sa(i, i) += 1e-6;
      sb(i, i) += 1e-6;
    }
  }
  // Tr (Sa Sb)^(1/2) = Tr (Sa^(1/2) Sb Sa^(1/2))^(1/2)
  Tensor ra = sqrtm_psd(sa);
  Tensor m = matmul_raw(matmul_raw(ra, sb), ra);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double s = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = s;
      m(j, i) = s;
    }
  }
  auto eig = jacobi_eigen(m);
  double trace_root = 0.0;
  for (double ev : eig.values) trace_root += std::sqrt(std::max(ev, 0.0));
  double trace_sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace_sum += sa(i, i) + sb(i, i);
  return std::max(0.0, mean_term + trace_sum - 2.0 * trace_root);
}

double frechet_proxy(const Tensor& a, const Tensor& b) {
  return frechet_distance(fit_gaussian(a), fit_gaussian(b));
}

ModeCoverage mode_coverage(const Tensor& samples, const Tensor& centers, double radius,
                           double min_fraction) {
  if (centers.size() == 0) throw DataError("mode_coverage needs at least one center");
  if (!(radius > 0.0)) throw DomainError("mode_coverage radius must be positive");
  if (samples.cols() != centers.cols()) throw ShapeError("samples and centers differ in dimension");
  const std::size_t k = centers.rows();
  ModeCoverage cov;
  cov.counts.assign(k, 0);
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < samples.cols(); ++j) {
        const double t = samples(i, j) - centers(c, j);
        s += t * t;
      }
      if (s < best) {
        best = s;
        arg = c;
      }
    }
    if (best <= r2) {
      ++cov.counts[arg];
    } else {
      ++cov.unassigned;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(samples.rows(), 1));
  for (std::size_t c = 0; c < k; ++c) {
    const double f = static_cast<double>(cov.counts[c]) / n;
    cov.fractions.push_back(f);
    if (cov.counts[c] > 0 && f >= min_fraction) ++cov.covered;
  }
  return cov;
}

std::string to_string(InterpolationMode m) {
  return m == InterpolationMode::linear_latent ? "linear" : "density";
}

InterpolationMode interpolation_mode_from_string(const std::string& s) {
  if (s == "linear" || s == "linear_latent") return InterpolationMode::linear_latent;
  if (s == "density" || s == "density_based") return InterpolationMode::density_based;
  throw ConfigError("unknown interpolation mode '" + s + "' (expected linear or density)");
}

namespace {

Tensor blend(const Tensor& a, const Tensor& b, double alpha) {
  Tensor out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] = alpha * a.data[k] + (1.0 - alpha) * b.data[k];
  return out;
}

}  // namespace

InterpolationPath interpolate(nets::ModelBundle& bundle, const Tensor& start, const Tensor& end,
                              std::size_t steps, InterpolationMode mode) {
  if (!bundle.latent_generator || !bundle.decoder) {
    throw ModelError("interpolation needs a latent generator and a decoder");
  }
  if (steps < 2) throw DomainError("interpolation needs at least 2 steps");
  if (start.cols() != bundle.noise_dim || end.cols() != bundle.noise_dim || start.rows() != 1 ||
      end.rows() != 1) {
    throw ShapeError("interpolation endpoints must be 1 x noise_dim");
  }
  auto& lg = *bundle.latent_generator;
  auto& dec = *bundle.decoder;

  InterpolationPath path;
  path.start = start;
  path.end = end;
  path.steps = steps;
  path.mode = mode;
  path.latent = Tensor::zeros({steps, bundle.latent_dim});
  path.decoded = Tensor::zeros({steps, bundle.data_dim});

  Tensor lg_start;
  Tensor lg_end;
  if (mode == InterpolationMode::linear_latent) {
    lg_start = nets::predict(lg, start);
    lg_end = nets::predict(lg, end);
  }
  for (std::size_t i = 0; i < steps; ++i) {
    const double alpha = 1.0 - static_cast<double>(i) / static_cast<double>(steps - 1);
    path.alphas.push_back(alpha);
    Tensor z = mode == InterpolationMode::linear_latent
                   ? blend(lg_start, lg_end, alpha)
                   : nets::predict(lg, blend(start, end, alpha));
    Tensor x = nets::predict(dec, z);
    std::copy(z.data.begin(), z.data.end(), path.latent.row_span(i).begin());
    std::copy(x.data.begin(), x.data.end(), path.decoded.row_span(i).begin());
  }
  return path;
}

double mean_nearest_distance(const Tensor& points, const Tensor& reference) {
  if (points.cols() != reference.cols()) throw ShapeError("points and reference differ in dimension");
  if (reference.size() == 0 || points.size() == 0) throw DataError("empty point set");
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < reference.rows(); ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < points.cols(); ++j) {
        const double t = points(i, j) - reference(r, j);
        s += t * t;
      }
      best = std::min(best, s);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(points.rows());
}

namespace {

double default_radius(const Tensor& centers) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centers.rows(); ++a) {
    for (std::size_t b = a + 1; b < centers.rows(); ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < centers.cols(); ++j) {
        const double t = centers(a, j) - centers(b, j);
        s += t * t;
      }
      best = std::min(best, std::sqrt(s));
    }
  }
  return std::isfinite(best) ? best / 3.0 : 1.0;
}

}  // namespace

EvalReport eval_suite(nets::ModelBundle& bundle, const data::Dataset& ds, const EvalOptions& opts) {
  if (bundle.data_dim != ds.dim()) {
    throw ShapeError("dataset dimension " + std::to_string(ds.dim()) +
                     " differs from the model's data_dim " + std::to_string(bundle.data_dim));
  }
  const Tensor held_out = ds.validation();
  EvalReport report;
  if (bundle.has_autoencoder()) {
    Tensor z = nets::predict(*bundle.encoder, held_out);
    Tensor xr = nets::predict(*bundle.decoder, z);
    double sq = 0.0;
    for (std::size_t k = 0; k < xr.size(); ++k) {
      const double t = xr.data[k] - held_out.data[k];
      sq += t * t;
    }
    report.reconstruction = sq / static_cast<double>(held_out.rows());
    if (bundle.latent_dim >= 2) {
      cw::CwConfig cfg{bundle.latent_dim, cw::SigmaMode::unit, 1e-9};
      report.latent_cw = cw::cw2_to_gaussian(ad::constant(z), cfg).item();
    }
  }

  std::optional<Tensor> lcw_samples;
  Tensor prior_samples = train::sample(bundle, opts.generated, mix_seed(opts.seed, 41),
                                       train::SamplePath::prior);
  if (bundle.latent_generator && bundle.decoder) {
    lcw_samples = train::sample(bundle, opts.generated, mix_seed(opts.seed, 42),
                                train::SamplePath::lcw);
  }
  if (opts.frechet) {
    const FrechetStats data_stats = fit_gaussian(held_out);
    report.frechet_prior = frechet_distance(data_stats, fit_gaussian(prior_samples));
    if (lcw_samples) report.frechet_lcw = frechet_distance(data_stats, fit_gaussian(*lcw_samples));
  }
  if (ds.centers) {
    const double radius = opts.coverage_radius > 0.0 ? opts.coverage_radius
                                                      : default_radius(*ds.centers);
    const Tensor& generated = lcw_samples ? *lcw_samples : prior_samples;
    auto cov = mode_coverage(generated, *ds.centers, radius, opts.min_mode_fraction);
    report.modes_covered = cov.covered;
    report.modes_total = ds.centers->rows();
    report.min_mode_fraction = *std::min_element(cov.fractions.begin(), cov.fractions.end());
  }
  return report;
}

}  // namespace lcw::eval
