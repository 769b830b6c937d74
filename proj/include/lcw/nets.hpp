#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcw/autodiff.hpp"

namespace lcw::nets {

enum class Activation { relu, sigmoid, tanh, linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct LayerSpec {
  std::size_t width = 0;
  Activation activation = Activation::relu;
  bool batchnorm = false;
};

/// Fully connected stack. Each layer is affine, then optional batchnorm,
/// then its activation.
struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;

  std::size_t output_dim() const { return layers.empty() ? input_dim : layers.back().width; }
  void validate() const;
};

struct Layer {
  ad::Var weight;  // fan_in x width
  ad::Var bias;    // 1 x width
  std::optional<ad::BatchNormState> bn;
};

struct Mlp {
  MlpSpec spec;
  std::vector<Layer> layers;

  /// Trainable tensors in a fixed order (per layer: W, b, then bn gamma, beta).
  std::vector<ad::Var> parameters() const;
  std::size_t parameter_count() const;
  std::size_t input_dim() const { return spec.input_dim; }
  std::size_t output_dim() const { return spec.output_dim(); }

  /// Deep copy; copying an Mlp by value shares its parameter storage.
  Mlp clone() const;
};

/// He-normal weights for ReLU layers, Xavier-normal otherwise; zero biases.
Mlp build_mlp(const MlpSpec& spec, std::uint64_t seed);

/// data_dim -> 200 -> 200 -> 200 -> latent_dim, ReLU hidden, linear output.
Mlp build_encoder(std::size_t data_dim, std::size_t latent_dim, std::uint64_t seed);

/// latent_dim -> 200 -> 200 -> 200 -> data_dim, ReLU hidden. The output is
/// sigmoid for data in [0, 1]; unbounded synthetic data uses linear.
Mlp build_decoder(std::size_t latent_dim, std::size_t data_dim, std::uint64_t seed,
                  Activation final_activation = Activation::sigmoid);

/// noise_dim -> width x depth (affine, batchnorm, ReLU) -> latent_dim linear.
Mlp build_latent_generator(std::size_t noise_dim, std::size_t latent_dim, std::uint64_t seed,
                           std::size_t width = 512, std::size_t depth = 5);

/// Direct noise -> data generator; same body as the latent generator.
Mlp build_generator(std::size_t noise_dim, std::size_t data_dim, std::uint64_t seed,
                    Activation final_activation, std::size_t width = 512, std::size_t depth = 5);

/// Applies the network. Train mode uses batch statistics in batchnorm layers
/// and updates their running estimates; eval mode leaves the network untouched.
ad::Var forward(Mlp& net, const ad::Var& input, ad::Mode mode);

/// Eval-mode forward on plain values, processed in chunks of `chunk` rows.
Tensor predict(Mlp& net, const Tensor& input, std::size_t chunk = 1024);

struct ModelBundle {
  std::size_t data_dim = 0;
  std::size_t latent_dim = 0;
  std::size_t noise_dim = 0;
  std::optional<Mlp> encoder;
  std::optional<Mlp> decoder;
  std::optional<Mlp> latent_generator;
  /// Direct noise -> data generator (no autoencoder).
  std::optional<Mlp> generator;
  /// Completed training epochs per network family.
  std::size_t autoencoder_epochs = 0;
  std::size_t latent_generator_epochs = 0;
  std::size_t generator_epochs = 0;

  bool has_autoencoder() const { return encoder.has_value() && decoder.has_value(); }
  /// Throws ShapeError when the networks do not chain as E: X->Z, D: Z->X,
  /// LG: Z'->Z, G: Z'->X.
  void validate() const;
};

}  // namespace lcw::nets
