#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "lcw/error.hpp"
#include "lcw/nets.hpp"

using namespace lcw;
using namespace lcw::nets;
using lcw::testing::check_gradients;
using lcw::testing::random_tensor;

namespace {

std::size_t mlp_count(std::size_t in, std::vector<std::size_t> widths, std::size_t bn_layers = 0,
                      std::size_t bn_width = 0) {
  std::size_t total = 0;
  for (auto w : widths) {
    total += in * w + w;
    in = w;
  }
  return total + bn_layers * 2 * bn_width;
}

// Swaps in the given leaves for the network parameters, in parameters() order.
void bind(Mlp& net, const std::vector<ad::Var>& v, std::size_t offset) {
  std::size_t k = offset;
  for (auto& l : net.layers) {
    l.weight = v[k++];
    l.bias = v[k++];
    if (l.bn) {
      l.bn->gamma = v[k++];
      l.bn->beta = v[k++];
    }
  }
}

void check_network_gradient(const Mlp& net, std::size_t batch, std::uint64_t seed) {
  std::vector<Tensor> inputs{random_tensor(batch, net.input_dim(), seed)};
  for (const auto& p : net.parameters()) inputs.push_back(p.value());
  const Tensor weights = random_tensor(batch, net.output_dim(), seed + 1);
  auto r = check_gradients(
      [&](const auto& v) {
        Mlp probe = net.clone();
        bind(probe, v, 1);
        return sum(mul(forward(probe, v[0], ad::Mode::train), ad::constant(weights)));
      },
      inputs);
  CHECK(r.finite);
  CHECK(r.max_rel_error < 1e-4);
}

}  // namespace

TEST_CASE("builders") {
  SUBCASE("encoder parameter count") {
    Mlp e = build_encoder(784, 8, 1);
    CHECK(e.parameter_count() == 239008);
    CHECK(e.parameter_count() == mlp_count(784, {200, 200, 200, 8}));
    CHECK(e.output_dim() == 8);
    CHECK(e.spec.layers.back().activation == Activation::linear);
  }
  SUBCASE("decoder parameter count and range") {
    Mlp d = build_decoder(8, 784, 1);
    CHECK(d.parameter_count() == mlp_count(8, {200, 200, 200, 784}));
    CHECK(d.parameter_count() == 239784);
    Tensor out = predict(d, random_tensor(20, 8, 3));
    for (double v : out.data) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
  SUBCASE("latent generator shape") {
    Mlp lg = build_latent_generator(8, 8, 1);
    CHECK(lg.spec.layers.size() == 6);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(lg.spec.layers[i].width == 512);
      CHECK(lg.spec.layers[i].batchnorm);
      CHECK(lg.spec.layers[i].activation == Activation::relu);
    }
    CHECK_FALSE(lg.spec.layers[5].batchnorm);
    CHECK(lg.spec.layers[5].activation == Activation::linear);
    CHECK(lg.parameter_count() == mlp_count(8, {512, 512, 512, 512, 512, 8}, 5, 512));
  }
  SUBCASE("same seed gives identical weights") {
    for (int kind = 0; kind < 3; ++kind) {
      auto make = [&](std::uint64_t s) {
        return kind == 0 ? build_encoder(10, 3, s)
                         : kind == 1 ? build_decoder(3, 10, s) : build_latent_generator(4, 3, s, 16, 2);
      };
      Mlp a = make(42), b = make(42), c = make(43);
      auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
      bool any_diff = false;
      for (std::size_t k = 0; k < pa.size(); ++k) {
        CHECK(pa[k].value().data == pb[k].value().data);
        any_diff |= pa[k].value().data != pc[k].value().data;
      }
      CHECK(any_diff);
    }
  }
  SUBCASE("initialization scale") {
    Mlp e = build_encoder(400, 8, 5);
    const auto& w = e.layers[0].weight.value();
    double ss = 0;
    for (double v : w.data) ss += v * v;
    CHECK(std::sqrt(ss / w.size()) == doctest::Approx(std::sqrt(2.0 / 400)).epsilon(0.05));
    for (double v : e.layers[0].bias.value().data) CHECK(v == 0.0);
    const auto& wl = e.layers[3].weight.value();
    double sl = 0;
    for (double v : wl.data) sl += v * v;
    CHECK(std::sqrt(sl / wl.size()) == doctest::Approx(std::sqrt(2.0 / (200 + 8))).epsilon(0.2));
  }
}

TEST_CASE("forward") {
  SUBCASE("identity linear layer") {
    Mlp net = build_mlp({3, {{3, Activation::linear, false}}}, 1);
    net.layers[0].weight.mutable_value() = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    Tensor x = random_tensor(4, 3, 2);
    CHECK(predict(net, x).data == x.data);
  }
  SUBCASE("zero input follows the bias path") {
    Mlp e = build_encoder(5, 2, 3);
    for (auto& l : e.layers) {
      for (auto& v : l.bias.mutable_value().data) v = 0.1;
    }
    Tensor out = predict(e, Tensor::zeros({2, 5}));
    // With zero input every hidden unit is relu(0.1 + W^T h), independent of the row.
    CHECK(out.all_finite());
    CHECK(out(0, 0) == out(1, 0));
    CHECK(predict(e, Tensor::zeros({2, 5})).data == out.data);
  }
  SUBCASE("shape contract through E then D") {
    Mlp e = build_encoder(6, 2, 1), d = build_decoder(2, 6, 2, Activation::linear);
    Tensor out = predict(d, predict(e, random_tensor(7, 6, 3)));
    CHECK(out.shape == std::vector<std::size_t>{7, 6});
    CHECK_THROWS_AS(predict(e, random_tensor(7, 5, 3)), ShapeError);
  }
  SUBCASE("eval mode is pure, train mode touches only running stats") {
    Mlp lg = build_latent_generator(3, 2, 9, 16, 2);
    Tensor z = random_tensor(1, 3, 4);
    Tensor a = predict(lg, z), b = predict(lg, z);
    CHECK(a.data == b.data);
    CHECK_THROWS(forward(lg, ad::constant(z), ad::Mode::train));
    auto before = lg.clone();
    forward(lg, ad::constant(random_tensor(8, 3, 5)), ad::Mode::train);
    auto p0 = before.parameters(), p1 = lg.parameters();
    for (std::size_t k = 0; k < p0.size(); ++k) CHECK(p0[k].value().data == p1[k].value().data);
    CHECK(before.layers[0].bn->running_mean.data != lg.layers[0].bn->running_mean.data);
  }
  SUBCASE("clone is deep") {
    Mlp e = build_encoder(3, 2, 1);
    Mlp c = e.clone();
    c.layers[0].weight.mutable_value().data[0] += 1.0;
    CHECK(c.layers[0].weight.value().data[0] != e.layers[0].weight.value().data[0]);
  }
}

TEST_CASE("gradients through full networks") {
  check_network_gradient(build_encoder(5, 3, 11), 4, 100);
  check_network_gradient(build_decoder(3, 5, 12), 4, 200);
  check_network_gradient(build_decoder(3, 5, 13, Activation::linear), 4, 300);
  check_network_gradient(build_latent_generator(3, 2, 14, 6, 3), 5, 400);
  check_network_gradient(build_generator(3, 4, 15, Activation::sigmoid, 6, 2), 5, 500);
}

TEST_CASE("model bundle validation") {
  ModelBundle b;
  b.data_dim = 6;
  b.latent_dim = 2;
  b.noise_dim = 3;
  b.encoder = build_encoder(6, 2, 1);
  b.decoder = build_decoder(2, 6, 2);
  b.latent_generator = build_latent_generator(3, 2, 3, 8, 2);
  CHECK_NOTHROW(b.validate());
  b.latent_generator = build_latent_generator(3, 4, 3, 8, 2);
  CHECK_THROWS_AS(b.validate(), ShapeError);
  b.latent_generator.reset();
  b.decoder = build_decoder(3, 6, 2);
  CHECK_THROWS_AS(b.validate(), ShapeError);
}

TEST_CASE("activation names") {
  for (auto a : {Activation::relu, Activation::sigmoid, Activation::tanh, Activation::linear}) {
    CHECK(activation_from_string(to_string(a)) == a);
  }
  CHECK_THROWS(activation_from_string("swish"));
}
