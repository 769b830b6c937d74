#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcw/autodiff.hpp"
#include "lcw/datasets.hpp"
#include "lcw/nets.hpp"

namespace lcw::train {

enum class Objective { ae, cwae, cw2, lt, cw_gen, sw_gen };

std::string to_string(Objective o);
/// Accepts the lowercase names used on the command line ("cw2", "sw_gen", ...).
Objective objective_from_string(const std::string& s);

struct TrainConfig {
  Objective objective = Objective::cw2;
  double lr = 1e-3;
  double lambda = 1.0;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::size_t data_dim = 0;
  std::size_t latent_dim = 8;
  std::size_t noise_dim = 8;
  std::uint64_t seed = 0;
  std::size_t sw_num_dirs = 1000;
  /// Fréchet proxy every `eval_every` epochs and after the last one; 0 disables it.
  std::size_t eval_every = 0;
  std::size_t eval_samples = 2000;
  double clip_norm = 5.0;
  /// Wrap the CW2 reconstruction term in a log as well (ablation only).
  bool log_both = false;
  nets::Activation final_activation = nets::Activation::sigmoid;
  std::size_t lg_width = 512;
  std::size_t lg_depth = 5;
  bool record_wall_time = true;

  void validate() const;
};

struct MetricsRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double rec_term = 0.0;
  double latent_term = 0.0;
  std::optional<double> frechet;
  double wall_s = 0.0;
};

/// A scalar objective plus the values of its two parts.
struct LossParts {
  ad::Var total;
  double rec = 0.0;
  double latent = 0.0;
};

/// Mean over samples of the squared Euclidean reconstruction error.
ad::Var mse(const ad::Var& x, const ad::Var& reconstruction);

/// Plain autoencoder: MSE only.
LossParts loss_ae(const Tensor& x, nets::ModelBundle& bundle, const TrainConfig& cfg);
/// MSE(X, D(E(X))) + lambda * log d2_CW(E(X), N(0, I)).
LossParts loss_cwae(const Tensor& x, nets::ModelBundle& bundle, const TrainConfig& cfg);
/// d2_CW(X, D(E(X))) + lambda * log d2_CW(E(X), N(0, I)).
LossParts loss_cw2(const Tensor& x, nets::ModelBundle& bundle, const TrainConfig& cfg);
/// d2_CW(E(X), LG(Z')) with the encoder held fixed.
LossParts loss_lt(const Tensor& x, const Tensor& zprime, nets::ModelBundle& bundle,
                  const TrainConfig& cfg);
/// Same objective given already-encoded latents.
LossParts loss_lt_latent(const Tensor& latents, const Tensor& zprime, nets::Mlp& latent_gen,
                         const TrainConfig& cfg);
/// d2_CW(X, G(Z')) or SW(X, G(Z')), chosen by cfg.objective. `dir_seed`
/// selects the projection directions for the sliced variant.
LossParts loss_direct_generator(const Tensor& x, const Tensor& zprime, nets::Mlp& gen,
                                const TrainConfig& cfg, std::uint64_t dir_seed = 0);

struct TrainResult {
  nets::ModelBundle bundle;
  std::vector<MetricsRecord> history;
};

/// The untrained encoder and decoder stage one starts from for this config.
nets::ModelBundle initial_autoencoder(std::size_t data_dim, const TrainConfig& cfg);

/// Stage one: trains E and D with the AE, CWAE or CW2 objective.
TrainResult train_stage1(const data::Dataset& ds, const TrainConfig& cfg);

/// Stage two: fits a latent generator to the encoded training data. The
/// encoder and decoder of `bundle` are not modified.
TrainResult train_stage2(const data::Dataset& ds, nets::ModelBundle bundle,
                         const TrainConfig& cfg);

/// Direct noise -> data generator trained on a CW or SW distance in data space.
TrainResult train_generator(const data::Dataset& ds, const TrainConfig& cfg);

enum class SamplePath { prior, lcw };

std::string to_string(SamplePath p);
SamplePath sample_path_from_string(const std::string& s);

/// prior: D(z), z ~ N(0, I). lcw: D(LG(z')), z' ~ N(0, I). Bundles holding
/// only a direct generator sample G(z') on the prior path.
Tensor sample(nets::ModelBundle& bundle, std::size_t n, std::uint64_t seed, SamplePath path);

}  // namespace lcw::train
