#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gradcheck.hpp"
#include "lcw/error.hpp"
#include "lcw/eval.hpp"
#include "lcw/random.hpp"
#include "lcw/training.hpp"

using namespace lcw;
using namespace lcw::eval;
using lcw::testing::random_tensor;

namespace {

FrechetStats stats(std::vector<double> mean, std::vector<std::vector<double>> cov,
                   std::size_t samples = 1000) {
  FrechetStats s;
  s.mean = Tensor::zeros({1, mean.size()});
  s.mean.data = mean;
  std::vector<double> flat;
  for (const auto& r : cov) flat.insert(flat.end(), r.begin(), r.end());
  s.covariance = Tensor::matrix(cov.size(), cov.size(), flat);
  s.samples = samples;
  return s;
}

Tensor random_psd(std::size_t d, std::uint64_t seed) {
  Tensor a = random_tensor(d, d, seed);
  Tensor s = Tensor::zeros({d, d});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) s(i, j) += a(i, k) * a(j, k) / static_cast<double>(d);
  return s;
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  Tensor c = Tensor::zeros({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

double frobenius(const Tensor& t) {
  double s = 0;
  for (double v : t.data) s += v * v;
  return std::sqrt(s);
}

Tensor row(const Tensor& t, std::size_t i) { return take_rows(t, std::vector<std::size_t>{i}); }

data::Dataset ring(std::uint64_t seed) {
  return data::split(data::gaussian_ring(8, 5.0, 0.2, 5000, seed), 0.1, seed);
}

train::TrainConfig ring_config(train::Objective o, std::size_t epochs, std::uint64_t seed) {
  train::TrainConfig cfg;
  cfg.objective = o;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.latent_dim = 2;
  cfg.noise_dim = 2;
  cfg.final_activation = nets::Activation::linear;
  cfg.record_wall_time = false;
  cfg.lg_width = 64;
  cfg.lg_depth = 2;
  cfg.lr = 5e-4;
  return cfg;
}

}  // namespace

TEST_CASE("fit_gaussian") {
  SUBCASE("constant data has zero covariance") {
    auto s = fit_gaussian(Tensor::matrix({{3, 1}, {3, 1}, {3, 1}}));
    for (double v : s.covariance.data) CHECK(v == 0.0);
    CHECK(s.mean.data == std::vector<double>{3, 1});
  }
  SUBCASE("two points") {
    auto s = fit_gaussian(Tensor::matrix({{0, 0}, {2, 0}}));
    CHECK(s.mean.data == std::vector<double>{1, 0});
    CHECK(s.covariance.data == std::vector<double>{2, 0, 0, 0});
    CHECK(s.samples == 2);
  }
  SUBCASE("row permutation invariance") {
    Tensor x = random_tensor(50, 3, 1);
    std::vector<std::size_t> idx(50);
    std::iota(idx.rbegin(), idx.rend(), std::size_t{0});
    auto a = fit_gaussian(x), b = fit_gaussian(take_rows(x, idx));
    for (std::size_t k = 0; k < 9; ++k) {
      CHECK(a.covariance.data[k] == doctest::Approx(b.covariance.data[k]).epsilon(1e-13));
    }
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.mean.data[k] == doctest::Approx(b.mean.data[k]).epsilon(1e-13));
  }
  SUBCASE("too few samples") { CHECK_THROWS_AS(fit_gaussian(Tensor::matrix({{1, 2}})), DataError); }
}

TEST_CASE("symmetric eigendecomposition and square root") {
  for (std::size_t d : {1u, 2u, 5u, 16u, 33u, 64u}) {
    Tensor s = random_psd(d, 100 + d);
    Tensor r = sqrtm_psd(s);
    Tensor rr = matmul_plain(r, r);
    Tensor diff = rr;
    for (std::size_t k = 0; k < diff.size(); ++k) diff.data[k] -= s.data[k];
    CHECK(frobenius(diff) / frobenius(s) < 1e-8);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) CHECK(r(i, j) == doctest::Approx(r(j, i)).epsilon(1e-12));

    auto e = jacobi_eigen(s);
    CHECK(e.sweeps <= 100);
    for (double v : e.values) CHECK(v >= -1e-8);
    // V diag(w) V^T rebuilds S.
    Tensor rebuilt = Tensor::zeros({d, d});
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < d; ++k) rebuilt(i, j) += e.vectors(i, k) * e.values[k] * e.vectors(j, k);
    for (std::size_t k = 0; k < rebuilt.size(); ++k) rebuilt.data[k] -= s.data[k];
    CHECK(frobenius(rebuilt) / frobenius(s) < 1e-10);
  }
  SUBCASE("negative eigenvalues are clamped") {
    Tensor r = sqrtm_psd(Tensor::matrix({{4, 0}, {0, -1e-9}}));
    CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r(1, 1) == 0.0);
  }
  SUBCASE("non-square input") { CHECK_THROWS_AS(jacobi_eigen(Tensor::zeros({2, 3})), ShapeError); }
}

TEST_CASE("frechet_distance") {
  SUBCASE("identical statistics") {
    auto s = fit_gaussian(random_tensor(200, 4, 3));
    CHECK(frechet_distance(s, s) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(frechet_distance(s, s) >= 0.0);
  }
  SUBCASE("mean shift with identity covariance") {
    auto a = stats({0, 0, 0}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    auto b = stats({1, -2, 0.5}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(std::abs(frechet_distance(a, b) - 5.25) < 1e-10);
  }
  SUBCASE("scalar closed form") {
    for (double s1 : {0.1, 0.5, 1.0, 3.0}) {
      for (double s2 : {0.2, 1.0, 2.5}) {
        const double f = frechet_distance(stats({0}, {{s1 * s1}}), stats({0}, {{s2 * s2}}));
        CHECK(std::abs(f - (s1 - s2) * (s1 - s2)) < 1e-10);
      }
    }
  }
  SUBCASE("symmetric and non-negative on random statistics") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto a = fit_gaussian(random_tensor(60, 5, 10 + seed));
      auto b = fit_gaussian(random_tensor(60, 5, 40 + seed, 1.5));
      const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
      CHECK(ab >= 0.0);
      CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(frechet_distance(stats({0}, {{1}}), stats({0, 0}, {{1, 0}, {0, 1}})), ShapeError);
  }
  SUBCASE("more dimensions than samples stays defined") {
    const double f = frechet_proxy(random_tensor(5, 20, 1), random_tensor(5, 20, 2));
    CHECK(std::isfinite(f));
    CHECK(f >= 0.0);
  }
}

TEST_CASE("mode_coverage") {
  Tensor centers = Tensor::matrix({{0, 0}, {10, 0}, {0, 10}});
  SUBCASE("samples at the centers cover every mode") {
    auto c = mode_coverage(centers, centers, 1.0, 0.01);
    CHECK(c.covered == 3);
    CHECK(c.counts == std::vector<std::size_t>{1, 1, 1});
    CHECK(c.unassigned == 0);
  }
  SUBCASE("collapsed samples cover one mode") {
    Tensor s = Tensor::zeros({50, 2});
    for (std::size_t i = 0; i < 50; ++i) s(i, 0) = 10.0;
    auto c = mode_coverage(s, centers, 1.0, 0.01);
    CHECK(c.covered == 1);
    CHECK(c.fractions[1] == 1.0);
  }
  SUBCASE("far samples are unassigned and thresholds apply") {
    Tensor s = Tensor::matrix({{5, 5}, {0.1, 0}, {9.9, 0}});
    auto c = mode_coverage(s, centers, 1.0, 0.4);
    CHECK(c.unassigned == 1);
    CHECK(c.covered == 0);
    CHECK(mode_coverage(s, centers, 1.0, 0.3).covered == 2);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(mode_coverage(centers, Tensor(), 1.0), DataError);
    CHECK_THROWS_AS(mode_coverage(centers, centers, 0.0), DomainError);
  }
}

TEST_CASE("mean_nearest_distance") {
  Tensor ref = Tensor::matrix({{0, 0}, {3, 4}});
  CHECK(mean_nearest_distance(Tensor::matrix({{0, 1}, {3, 4}, {6, 8}}), ref) ==
        doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(mean_nearest_distance(Tensor::matrix({{0}}), ref), ShapeError);
}

struct RingFixture {
  std::vector<double> untrained, trained;
  nets::ModelBundle model;
  data::Dataset model_data;
};

// Built once: the enclosing test body reruns for every subcase.
const RingFixture& ring_fixture() {
  static const RingFixture fx = [] {
    RingFixture f;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto ds = ring(seed);
      auto cfg = ring_config(train::Objective::cw2, 20, seed);
      auto fresh = train::initial_autoencoder(2, cfg);
      auto r = train::train_stage1(ds, cfg);
      EvalOptions opts;
      opts.seed = seed;
      f.untrained.push_back(*eval_suite(fresh, ds, opts).frechet_prior);
      f.trained.push_back(*eval_suite(r.bundle, ds, opts).frechet_prior);
      if (seed == 1) {
        f.model = train::train_stage2(ds, r.bundle, ring_config(train::Objective::lt, 3, seed)).bundle;
        f.model_data = ds;
      }
    }
    return f;
  }();
  return fx;
}

TEST_CASE("trained ring models") {
  const RingFixture& fx = ring_fixture();
  auto untrained = fx.untrained, trained = fx.trained;
  std::sort(untrained.begin(), untrained.end());
  std::sort(trained.begin(), trained.end());
  MESSAGE("median frechet untrained " << untrained[1] << ", trained " << trained[1]);
  CHECK(trained[1] < untrained[1]);
  nets::ModelBundle model = fx.model;
  const data::Dataset* model_data = &fx.model_data;

  SUBCASE("held-out halves are closer than untrained samples") {
    const auto& ds = *model_data;
    const Tensor all = ds.points;
    std::vector<std::size_t> first(all.rows() / 2), second(all.rows() / 2);
    std::iota(first.begin(), first.end(), std::size_t{0});
    std::iota(second.begin(), second.end(), all.rows() / 2);
    auto fresh = train::initial_autoencoder(2, ring_config(train::Objective::cw2, 1, 1));
    const double halves = frechet_proxy(take_rows(all, first), take_rows(all, second));
    const double noise = frechet_proxy(all, train::sample(fresh, 5000, 3, train::SamplePath::prior));
    CHECK(halves <= noise);
  }

  SUBCASE("eval_suite reports finite metrics") {
    auto& b = model;
    auto rep = eval_suite(b, *model_data, EvalOptions{});
    REQUIRE(rep.reconstruction);
    REQUIRE(rep.latent_cw);
    REQUIRE(rep.frechet_prior);
    REQUIRE(rep.frechet_lcw);
    REQUIRE(rep.modes_covered);
    CHECK(std::isfinite(*rep.reconstruction));
    CHECK(std::isfinite(*rep.latent_cw));
    CHECK(std::isfinite(*rep.frechet_prior));
    CHECK(std::isfinite(*rep.frechet_lcw));
    CHECK(*rep.modes_total == 8);
    CHECK(*rep.min_mode_fraction >= 0.0);

    data::Dataset unlabeled = *model_data;
    unlabeled.centers.reset();
    CHECK_FALSE(eval_suite(b, unlabeled, EvalOptions{}).modes_covered);
    auto wide = data::embed_rotated(*model_data, 3, 1);
    CHECK_THROWS_AS(eval_suite(b, wide, EvalOptions{}), ShapeError);
  }

  SUBCASE("interpolation") {
    auto& b = model;
    Tensor z1 = random_tensor(1, 2, 7), zk = random_tensor(1, 2, 8);
    const Tensor lg1 = nets::predict(*b.latent_generator, z1), lgk = nets::predict(*b.latent_generator, zk);
    const Tensor x1 = nets::predict(*b.decoder, lg1), xk = nets::predict(*b.decoder, lgk);

    for (auto mode : {InterpolationMode::linear_latent, InterpolationMode::density_based}) {
      auto p = interpolate(b, z1, zk, 2, mode);
      CHECK(p.decoded.rows() == 2);
      CHECK(row(p.decoded, 0).data == x1.data);
      CHECK(row(p.decoded, 1).data == xk.data);
      CHECK(p.alphas == std::vector<double>{1.0, 0.0});
    }
    auto lin = interpolate(b, z1, zk, 9, InterpolationMode::linear_latent);
    auto den = interpolate(b, z1, zk, 9, InterpolationMode::density_based);
    CHECK(row(lin.decoded, 0).data == row(den.decoded, 0).data);
    CHECK(row(lin.decoded, 8).data == row(den.decoded, 8).data);
    CHECK(row(lin.latent, 0).data == row(den.latent, 0).data);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(lin.alphas[i] == doctest::Approx(1.0 - static_cast<double>(i) / 8.0).epsilon(1e-15));
    }
    CHECK(row(lin.latent, 4).data != row(den.latent, 4).data);
    // Linear latent points lie on the segment between the endpoint latents.
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(lin.latent(4, c) == doctest::Approx(0.5 * lg1(0, c) + 0.5 * lgk(0, c)).epsilon(1e-12));
    }
    CHECK(std::isfinite(mean_nearest_distance(den.latent, nets::predict(*b.encoder, model_data->train()))));

    CHECK_THROWS_AS(interpolate(b, z1, zk, 1, InterpolationMode::linear_latent), DomainError);
    nets::ModelBundle no_lg = b;
    no_lg.latent_generator.reset();
    CHECK_THROWS_AS(interpolate(no_lg, z1, zk, 5, InterpolationMode::density_based), ModelError);
    CHECK(interpolation_mode_from_string(to_string(InterpolationMode::density_based)) ==
          InterpolationMode::density_based);
    CHECK_THROWS_AS(interpolation_mode_from_string("cubic"), ConfigError);
  }
}
