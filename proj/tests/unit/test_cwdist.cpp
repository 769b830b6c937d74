#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "gradcheck.hpp"
#include "lcw/cwdist.hpp"
#include "lcw/error.hpp"
#include "lcw/random.hpp"
#include "oracles.hpp"

using namespace lcw;
using lcw::testing::check_gradients;
using lcw::testing::random_tensor;

namespace {

Tensor shifted(Tensor t, double by) {
  for (auto& v : t.data) v += by;
  return t;
}

Tensor permuted(const Tensor& t, std::uint64_t seed) {
  std::vector<std::size_t> idx(t.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return take_rows(t, idx);
}

double d2_two(const Tensor& x, const Tensor& y) {
  cw::CwConfig cfg{x.cols(), cw::SigmaMode::pooled, 1e-9};
  return cw::cw2_two_samples(ad::constant(x), ad::constant(y), cfg).item();
}

double d2_gauss(const Tensor& z) {
  cw::CwConfig cfg{z.cols(), cw::SigmaMode::unit, 1e-9};
  return cw::cw2_to_gaussian(ad::constant(z), cfg).item();
}

}  // namespace

TEST_CASE("silverman_gamma") {
  auto b = cw::silverman_gamma(1, 1.0);
  CHECK(b.gamma == doctest::Approx(1.121952).epsilon(1e-5));
  CHECK(b.gamma == doctest::Approx(std::pow(4.0 / 3.0, 0.4)).epsilon(1e-15));
  CHECK(b.sigma_hat == 1.0);
  CHECK(b.n == 1);
  CHECK(cw::silverman_gamma(100, 2.0).gamma == doctest::Approx(2 * cw::silverman_gamma(100, 1.0).gamma));
  CHECK(cw::silverman_gamma(256, 0.7).gamma ==
        doctest::Approx(0.7 * std::pow(4.0 / (3.0 * 256), 0.4)).epsilon(1e-14));
  CHECK_THROWS_AS(cw::silverman_gamma(0, 1.0), DomainError);
}

TEST_CASE("pooled_sigma") {
  Tensor c = Tensor::matrix({{2, 2}, {2, 2}});
  CHECK(cw::pooled_sigma(c, c) == 1e-7);
  CHECK(cw::pooled_sigma(Tensor::matrix({{0}, {2}}), Tensor()) == doctest::Approx(1.0).epsilon(1e-15));
  Tensor x = random_tensor(7, 3, 1), y = random_tensor(5, 3, 2);
  CHECK(cw::pooled_sigma(x, y) == doctest::Approx(cw::pooled_sigma(y, x)).epsilon(1e-14));
  CHECK_THROWS_AS(cw::pooled_sigma(Tensor::matrix({{1}}), Tensor()), DataError);
}

TEST_CASE("cw2_to_gaussian") {
  SUBCASE("single point at the origin") {
    const double g = std::pow(4.0 / 3.0, 0.4);
    for (std::size_t d : {2u, 5u, 16u}) {
      double expected = (1 / std::sqrt(g) + 1 / std::sqrt(1 + g) - 2 / std::sqrt(g + 0.5)) /
                        (2 * std::sqrt(std::numbers::pi));
      CHECK(d2_gauss(Tensor::zeros({1, d})) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
  SUBCASE("shifted sample is farther") {
    Tensor z = random_tensor(128, 8, 3);
    CHECK(d2_gauss(shifted(z, 5.0)) > d2_gauss(z));
  }
  SUBCASE("dimension one rejected") {
    CHECK_THROWS_AS(d2_gauss(random_tensor(4, 1, 1)), DomainError);
  }
  SUBCASE("matches the kernel formula") {
    Tensor z = random_tensor(30, 5, 6, 1.3);
    const double g = cw::silverman_gamma(30, 1.0).gamma;
    double self = 0, cross = 0;
    for (std::size_t i = 0; i < 30; ++i) {
      double ni = 0;
      for (std::size_t c = 0; c < 5; ++c) ni += z(i, c) * z(i, c);
      cross += 1 / std::sqrt(g + 0.5 + ni / 7.0);
      for (std::size_t j = 0; j < 30; ++j) {
        double s = 0;
        for (std::size_t c = 0; c < 5; ++c) s += std::pow(z(i, c) - z(j, c), 2);
        self += 1 / std::sqrt(g + s / 7.0);
      }
    }
    const double expected =
        (self / 900.0 + 1 / std::sqrt(1 + g) - 2 * cross / 30.0) / (2 * std::sqrt(std::numbers::pi));
    CHECK(d2_gauss(z) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("agrees with the sliced oracle") {
    Tensor z = random_tensor(256, 32, 4);
    const double gamma = cw::silverman_gamma(256, 1.0).gamma;
    const double oracle = lcw::testing::sliced_cw_gaussian_oracle(z, gamma, 20000, 5);
    CHECK(std::abs(d2_gauss(z) - oracle) / oracle < 0.05);
  }
  SUBCASE("decreases with sample size") {
    std::vector<double> med;
    for (std::size_t n : {64u, 256u, 1024u, 4096u}) {
      std::vector<double> v;
      for (std::uint64_t s = 0; s < 5; ++s) v.push_back(d2_gauss(random_tensor(n, 8, 100 + s + n)));
      std::sort(v.begin(), v.end());
      med.push_back(v[2]);
    }
    for (std::size_t i = 1; i < med.size(); ++i) CHECK(med[i] < med[i - 1]);
  }
  SUBCASE("gradient") {
    auto r = check_gradients(
        [](const auto& v) { return cw::cw2_to_gaussian(v[0], {3, cw::SigmaMode::unit, 1e-9}); },
        {random_tensor(6, 3, 7)});
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("cw2_two_samples") {
  Tensor x = random_tensor(40, 4, 11);
  Tensor y = shifted(random_tensor(40, 4, 12), 0.5);
  SUBCASE("identical samples give exactly zero") { CHECK(d2_two(x, x) == 0.0); }
  SUBCASE("bit-exact symmetry") { CHECK(d2_two(x, y) == d2_two(y, x)); }
  SUBCASE("permutation invariance") {
    CHECK(std::abs(d2_two(permuted(x, 1), permuted(y, 2)) - d2_two(x, y)) < 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(d2_two(x, random_tensor(39, 4, 1)), ShapeError);
    CHECK_THROWS_AS(d2_two(random_tensor(5, 1, 1), random_tensor(5, 1, 2)), DomainError);
  }
  SUBCASE("bandwidth uses the pooled sigma") {
    cw::CwConfig cfg{4, cw::SigmaMode::pooled, 1e-9};
    auto b = cw::two_sample_bandwidth(x, y, cfg);
    CHECK(b.sigma_hat == doctest::Approx(cw::pooled_sigma(x, y)).epsilon(1e-15));
    CHECK(b.gamma == doctest::Approx(cw::silverman_gamma(40, b.sigma_hat).gamma).epsilon(1e-15));
  }
  SUBCASE("matches the kernel formula") {
    cw::CwConfig cfg{4, cw::SigmaMode::pooled, 1e-9};
    const double g = cw::two_sample_bandwidth(x, y, cfg).gamma;
    auto k = [&](const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
      double s = 0;
      for (std::size_t c = 0; c < 4; ++c) s += std::pow(a(i, c) - b(j, c), 2);
      return 1 / std::sqrt(g + s / 5.0);
    };
    double kxx = 0, kyy = 0, kxy = 0;
    for (std::size_t i = 0; i < 40; ++i)
      for (std::size_t j = 0; j < 40; ++j) kxx += k(x, i, x, j), kyy += k(y, i, y, j), kxy += k(x, i, y, j);
    double expected = (kxx + kyy - 2 * kxy) / (1600.0 * 2 * std::sqrt(std::numbers::pi));
    CHECK(d2_two(x, y) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("agrees with the sliced oracle") {
    Tensor a = random_tensor(256, 32, 21);
    Tensor b = shifted(random_tensor(256, 32, 22), 0.3);
    cw::CwConfig cfg{32, cw::SigmaMode::pooled, 1e-9};
    const double gamma = cw::two_sample_bandwidth(a, b, cfg).gamma;
    const double oracle = lcw::testing::sliced_cw_oracle(a, b, gamma, 20000, 23);
    CHECK(std::abs(d2_two(a, b) - oracle) / oracle < 0.05);
  }
  SUBCASE("gradient w.r.t. both samples") {
    const Tensor a = random_tensor(5, 3, 31), b = random_tensor(5, 3, 32);
    auto r = check_gradients(
        [](const auto& v) { return cw::cw2_two_samples(v[0], v[1], {3, cw::SigmaMode::unit, 1e-9}); }, {a, b});
    CHECK(r.max_rel_error < 1e-4);

    // Pooled bandwidth is held constant: with sigma frozen at s,
    // d2(x, y) = s^(-1/2) d2_unit(x / sqrt(s), y / sqrt(s)).
    const double s = cw::pooled_sigma(a, b);
    auto frozen = [s](const std::vector<ad::Var>& v) {
      const double k = 1.0 / std::sqrt(s);
      return ad::scale(cw::cw2_two_samples(ad::scale(v[0], k), ad::scale(v[1], k),
                                           {3, cw::SigmaMode::unit, 1e-9}),
                       k);
    };
    auto fr = check_gradients(frozen, {a, b});
    CHECK(fr.max_rel_error < 1e-4);
    ad::Var pa = ad::parameter(a), pb = ad::parameter(b);
    ad::Var fa = ad::parameter(a), fb = ad::parameter(b);
    const double pooled = cw::cw2_two_samples(pa, pb, {3, cw::SigmaMode::pooled, 1e-9}).item();
    ad::backward(cw::cw2_two_samples(pa, pb, {3, cw::SigmaMode::pooled, 1e-9}));
    ad::backward(frozen({fa, fb}));
    CHECK(pooled == doctest::Approx(frozen({ad::constant(a), ad::constant(b)}).item()).epsilon(1e-12));
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(pa.grad().data[k] == doctest::Approx(fa.grad().data[k]).epsilon(1e-10));
      CHECK(pb.grad().data[k] == doctest::Approx(fb.grad().data[k]).epsilon(1e-10));
    }
  }
}

TEST_CASE("metric axioms over random cases") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t n = 2 + s % 13, d = 2 + s % 5;
    Tensor x = random_tensor(n, d, 1000 + s);
    Tensor y = shifted(random_tensor(n, d, 2000 + s, 1.0 + 0.1 * (s % 4)), 0.05 * (s % 7));
    const double xy = d2_two(x, y);
    CHECK(xy >= -1e-12);
    CHECK(xy > 0.0);
    CHECK(xy == d2_two(y, x));
    CHECK(d2_two(x, x) == 0.0);
  }
}

TEST_CASE("log_cw") {
  cw::CwConfig cfg;
  CHECK(cw::log_cw(ad::constant(Tensor::scalar(1.0)), cfg).item() == 0.0);
  CHECK(cw::log_cw(ad::constant(Tensor::scalar(0.0)), cfg).item() == std::log(1e-9));
  CHECK(cw::log_cw(ad::constant(Tensor::scalar(std::exp(2.0))), cfg).item() == doctest::Approx(2.0));
  ad::Var z = ad::parameter(Tensor::scalar(0.0));
  ad::backward(cw::log_cw(z, cfg));
  CHECK(z.grad().item() == 0.0);
}

TEST_CASE("sliced oracle basics") {
  Tensor x = random_tensor(20, 3, 41);
  CHECK(lcw::testing::sliced_cw_oracle(x, x, 0.5, 7, 1) == doctest::Approx(0.0).epsilon(1e-15));
  const double g = 0.8;
  double a = 2.5;
  CHECK(lcw::testing::two_sample_oracle_direction(&a, 1, &a, 1, g) == 0.0);
  double zero = 0.0;
  const double pi = std::numbers::pi;
  double expected = 1 / std::sqrt(4 * pi * g) + 1 / (2 * std::sqrt(pi * (1 + g))) -
                    2 / std::sqrt(2 * pi * (1 + 2 * g));
  CHECK(lcw::testing::gaussian_oracle_direction(&zero, 1, g) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(lcw::testing::sliced_cw_gaussian_oracle(Tensor::zeros({1, 4}), g, 13, 2) ==
        doctest::Approx(expected).epsilon(1e-14));
  Tensor big = random_tensor(2000, 4, 42);
  const double gamma = cw::silverman_gamma(2000, 1.0).gamma;
  const double centered = lcw::testing::sliced_cw_gaussian_oracle(big, gamma, 200, 3);
  const double moved = lcw::testing::sliced_cw_gaussian_oracle(shifted(big, 2.0), gamma, 200, 3);
  CHECK(centered >= -1e-9);
  CHECK(moved > 10 * centered);
}

TEST_CASE("sliced_wasserstein") {
  Tensor x = random_tensor(30, 3, 51);
  CHECK(cw::sliced_wasserstein(ad::constant(x), ad::constant(x), 50, 1).item() == 0.0);
  CHECK(cw::sliced_wasserstein(ad::constant(Tensor::matrix({{0}, {1}})),
                               ad::constant(Tensor::matrix({{11}, {10}})), 3, 1)
            .item() == doctest::Approx(100.0).epsilon(1e-14));
  double prev = 0.0;
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    double v = cw::sliced_wasserstein(ad::constant(x), ad::constant(shifted(x, t)), 200, 9).item();
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(cw::sliced_wasserstein(ad::constant(x), ad::constant(random_tensor(29, 3, 1)), 5, 1),
                  ShapeError);
  auto r = check_gradients(
      [](const auto& v) { return cw::sliced_wasserstein(v[0], v[1], 20, 4); },
      {random_tensor(6, 3, 52), random_tensor(6, 3, 53)});
  CHECK(r.max_rel_error < 1e-4);
}
