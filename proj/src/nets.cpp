#include "lcw/nets.hpp"

#include <algorithm>
#include <cmath>

#include "lcw/error.hpp"
#include "lcw/random.hpp"

namespace lcw::nets {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::tanh:
      return "tanh";
    case Activation::linear:
      return "linear";
  }
  return "linear";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "linear") return Activation::linear;
  throw FormatError("unknown activation '" + s + "'");
}

void MlpSpec::validate() const {
  if (input_dim == 0) throw ShapeError("MLP input dimension must be positive");
  if (layers.empty()) throw ShapeError("MLP needs at least one layer");
  for (const auto& l : layers) {
    if (l.width == 0) throw ShapeError("MLP layer widths must be positive");
  }
}

std::vector<ad::Var> Mlp::parameters() const {
  std::vector<ad::Var> out;
  for (const auto& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
    if (l.bn) {
      out.push_back(l.bn->gamma);
      out.push_back(l.bn->beta);
    }
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.value().size();
  return n;
}

Mlp Mlp::clone() const {
  Mlp copy;
  copy.spec = spec;
  for (const auto& l : layers) {
    Layer c;
    c.weight = ad::parameter(l.weight.value());
    c.bias = ad::parameter(l.bias.value());
    if (l.bn) {
      ad::BatchNormState bn = *l.bn;
      bn.gamma = ad::parameter(l.bn->gamma.value());
      bn.beta = ad::parameter(l.bn->beta.value());
      c.bn = std::move(bn);
    }
    copy.layers.push_back(std::move(c));
  }
  return copy;
}

Mlp build_mlp(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Mlp net;
  net.spec = spec;
  std::size_t fan_in = spec.input_dim;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& ls = spec.layers[i];
    Rng rng(mix_seed(seed, 17, i));
    const double std_dev = ls.activation == Activation::relu
                               ? std::sqrt(2.0 / static_cast<double>(fan_in))
                               : std::sqrt(2.0 / static_cast<double>(fan_in + ls.width));
    Tensor w = normal_matrix(fan_in, ls.width, rng);
    for (auto& v : w.data) v *= std_dev;
    Layer layer;
    layer.weight = ad::parameter(std::move(w));
    layer.bias = ad::parameter(Tensor::zeros({1, ls.width}));
    if (ls.batchnorm) layer.bn = ad::BatchNormState::make(ls.width);
    net.layers.push_back(std::move(layer));
    fan_in = ls.width;
  }
  return net;
}

namespace {

MlpSpec stack_spec(std::size_t in, std::size_t out, std::size_t width, std::size_t depth,
                   bool batchnorm, Activation final_activation) {
  MlpSpec spec;
  spec.input_dim = in;
  for (std::size_t i = 0; i < depth; ++i) spec.layers.push_back({width, Activation::relu, batchnorm});
  spec.layers.push_back({out, final_activation, false});
  return spec;
}

}  // namespace

Mlp build_encoder(std::size_t data_dim, std::size_t latent_dim, std::uint64_t seed) {
  return build_mlp(stack_spec(data_dim, latent_dim, 200, 3, false, Activation::linear), seed);
}

Mlp build_decoder(std::size_t latent_dim, std::size_t data_dim, std::uint64_t seed,
                  Activation final_activation) {
  return build_mlp(stack_spec(latent_dim, data_dim, 200, 3, false, final_activation), seed);
}

Mlp build_latent_generator(std::size_t noise_dim, std::size_t latent_dim, std::uint64_t seed,
                           std::size_t width, std::size_t depth) {
  return build_mlp(stack_spec(noise_dim, latent_dim, width, depth, true, Activation::linear), seed);
}

Mlp build_generator(std::size_t noise_dim, std::size_t data_dim, std::uint64_t seed,
                    Activation final_activation, std::size_t width, std::size_t depth) {
  return build_mlp(stack_spec(noise_dim, data_dim, width, depth, true, final_activation), seed);
}

ad::Var forward(Mlp& net, const ad::Var& input, ad::Mode mode) {
  if (input.cols() != net.input_dim() || input.value().rank() != 2) {
    throw ShapeError("network expects n x " + std::to_string(net.input_dim()) + " input, got " +
                     shape_string(input.value().shape));
  }
  ad::Var h = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& layer = net.layers[i];
    h = ad::add(ad::matmul(h, layer.weight), layer.bias);
    if (layer.bn) h = ad::batchnorm(h, *layer.bn, mode);
    switch (net.spec.layers[i].activation) {
      case Activation::relu:
        h = ad::relu(h);
        break;
      case Activation::sigmoid:
        h = ad::sigmoid(h);
        break;
      case Activation::tanh:
        h = ad::tanh(h);
        break;
      case Activation::linear:
        break;
    }
  }
  return h;
}

Tensor predict(Mlp& net, const Tensor& input, std::size_t chunk) {
  const std::size_t n = input.rows();
  if (n <= chunk) return forward(net, ad::constant(input), ad::Mode::eval).value();
  std::vector<double> out;
  out.reserve(n * net.output_dim());
  std::vector<std::size_t> idx;
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t e = std::min(n, b + chunk);
    idx.clear();
    for (std::size_t i = b; i < e; ++i) idx.push_back(i);
    Tensor part = forward(net, ad::constant(take_rows(input, idx)), ad::Mode::eval).value();
    out.insert(out.end(), part.data.begin(), part.data.end());
  }
  return Tensor::matrix(n, net.output_dim(), std::move(out));
}

void ModelBundle::validate() const {
  auto expect = [](bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
  };
  if (encoder) {
    expect(encoder->input_dim() == data_dim, "encoder input dim differs from data_dim");
    expect(encoder->output_dim() == latent_dim, "encoder output dim differs from latent_dim");
  }
  if (decoder) {
    expect(decoder->input_dim() == latent_dim, "decoder input dim differs from latent_dim");
    expect(decoder->output_dim() == data_dim, "decoder output dim differs from data_dim");
  }
  if (latent_generator) {
    expect(latent_generator->input_dim() == noise_dim,
           "latent generator input dim differs from noise_dim");
    expect(latent_generator->output_dim() == latent_dim,
           "latent generator output dim differs from latent_dim");
  }
  if (generator) {
    expect(generator->input_dim() == noise_dim, "generator input dim differs from noise_dim");
    expect(generator->output_dim() == data_dim, "generator output dim differs from data_dim");
  }
}

}  // namespace lcw::nets
