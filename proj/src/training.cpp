#include "lcw/training.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "lcw/cwdist.hpp"
#include "lcw/error.hpp"
#include "lcw/eval.hpp"
#include "lcw/random.hpp"

namespace lcw::train {

namespace {

// Seed streams; each consumer of randomness gets its own.
enum Stream : std::uint64_t {
  kEncoderInit = 1,
  kDecoderInit = 2,
  kShuffle = 3,
  kEvalSamples = 4,
  kLatentGenInit = 5,
  kNoise = 6,
  kSlicedDirs = 7,
  kGeneratorInit = 8,
};

using Clock = std::chrono::steady_clock;

cw::CwConfig latent_cfg(std::size_t dim) { return {dim, cw::SigmaMode::unit, 1e-9}; }
cw::CwConfig pooled_cfg(std::size_t dim) { return {dim, cw::SigmaMode::pooled, 1e-9}; }

void zero_grads(const std::vector<ad::Var>& params) {
  for (const auto& p : params) p.zero_grad();
}

// Shuffled full batches for one epoch; the remainder is dropped.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch,
                                                    std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, kShuffle, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b + batch <= n; b += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                     order.begin() + static_cast<std::ptrdiff_t>(b + batch));
  }
  return out;
}

bool eval_due(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
}

struct EpochTotals {
  double loss = 0.0;
  double rec = 0.0;
  double latent = 0.0;
  std::size_t batches = 0;

  void add(const LossParts& parts) {
    loss += parts.total.item();
    rec += parts.rec;
    latent += parts.latent;
    ++batches;
  }

  MetricsRecord record(std::size_t epoch) const {
    const double n = static_cast<double>(std::max<std::size_t>(batches, 1));
    MetricsRecord r;
    r.epoch = epoch;
    r.loss = loss / n;
    r.rec_term = rec / n;
    r.latent_term = latent / n;
    return r;
  }
};

void optimizer_step(const std::vector<ad::Var>& params, ad::AdamState& adam,
                    const TrainConfig& cfg) {
  if (cfg.clip_norm > 0.0) ad::clip_grad_norm(params, cfg.clip_norm);
  ad::adam_step(params, adam, cfg.lr);
}

void check_finite(const LossParts& parts, std::size_t epoch) {
  if (!parts.total.value().all_finite()) {
    throw Error("objective became non-finite in epoch " + std::to_string(epoch));
  }
}

}  // namespace

std::string to_string(Objective o) {
  switch (o) {
    case Objective::ae:
      return "ae";
    case Objective::cwae:
      return "cwae";
    case Objective::cw2:
      return "cw2";
    case Objective::lt:
      return "lt";
    case Objective::cw_gen:
      return "cw_gen";
    case Objective::sw_gen:
      return "sw_gen";
  }
  return "cw2";
}

Objective objective_from_string(const std::string& s) {
  for (auto o : {Objective::ae, Objective::cwae, Objective::cw2, Objective::lt, Objective::cw_gen,
                 Objective::sw_gen}) {
    if (to_string(o) == s) return o;
  }
  throw ConfigError("unknown objective '" + s + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (latent_dim == 0 || noise_dim == 0) throw ConfigError("dimensions must be positive");
  const bool uses_lambda = objective == Objective::cwae || objective == Objective::cw2;
  if (uses_lambda && !(lambda > 0.0)) throw ConfigError("lambda must be positive");
  const bool cw_latent = objective == Objective::cwae || objective == Objective::cw2 ||
                         objective == Objective::lt;
  if (cw_latent && latent_dim < 2) {
    throw ConfigError("the Cramer-Wold latent term needs latent_dim >= 2");
  }
  if (objective == Objective::sw_gen && sw_num_dirs == 0) {
    throw ConfigError("sw_dirs must be positive");
  }
}

ad::Var mse(const ad::Var& x, const ad::Var& reconstruction) {
  auto diff = ad::sub(x, reconstruction);
  return ad::scale(ad::sum(ad::square(diff)), 1.0 / static_cast<double>(x.rows()));
}

LossParts loss_ae(const Tensor& x, nets::ModelBundle& bundle, const TrainConfig&) {
  if (!bundle.has_autoencoder()) throw ModelError("AE objective needs an encoder and decoder");
  auto xv = ad::constant(x);
  auto z = nets::forward(*bundle.encoder, xv, ad::Mode::train);
  auto xr = nets::forward(*bundle.decoder, z, ad::Mode::train);
  auto rec = mse(xv, xr);
  LossParts parts;
  parts.rec = rec.item();
  parts.total = rec;
  return parts;
}

LossParts loss_cwae(const Tensor& x, nets::ModelBundle& bundle, const TrainConfig& cfg) {
  if (!bundle.has_autoencoder()) throw ModelError("CWAE objective needs an encoder and decoder");
  auto xv = ad::constant(x);
  auto z = nets::forward(*bundle.encoder, xv, ad::Mode::train);
  auto xr = nets::forward(*bundle.decoder, z, ad::Mode::train);
  auto rec = mse(xv, xr);
  auto lcfg = latent_cfg(z.cols());
  auto latent = cw::cw2_to_gaussian(z, lcfg);
  LossParts parts;
  parts.rec = rec.item();
  parts.latent = latent.item();
  parts.total = ad::add(rec, ad::scale(cw::log_cw(latent, lcfg), cfg.lambda));
  return parts;
}

LossParts loss_cw2(const Tensor& x, nets::ModelBundle& bundle, const TrainConfig& cfg) {
  if (!bundle.has_autoencoder()) throw ModelError("CW2 objective needs an encoder and decoder");
  auto xv = ad::constant(x);
  auto z = nets::forward(*bundle.encoder, xv, ad::Mode::train);
  auto xr = nets::forward(*bundle.decoder, z, ad::Mode::train);
  auto dcfg = pooled_cfg(x.cols());
  auto rec = cw::cw2_two_samples(xv, xr, dcfg);
  auto lcfg = latent_cfg(z.cols());
  auto latent = cw::cw2_to_gaussian(z, lcfg);
  LossParts parts;
  parts.rec = rec.item();
  parts.latent = latent.item();
  auto rec_term = cfg.log_both ? cw::log_cw(rec, dcfg) : rec;
  parts.total = ad::add(rec_term, ad::scale(cw::log_cw(latent, lcfg), cfg.lambda));
  return parts;
}

LossParts loss_lt_latent(const Tensor& latents, const Tensor& zprime, nets::Mlp& latent_gen,
                         const TrainConfig&) {
  if (latents.rows() != zprime.rows()) {
    throw ShapeError("latent batch and noise batch must have the same size");
  }
  auto generated = nets::forward(latent_gen, ad::constant(zprime), ad::Mode::train);
  auto d2 = cw::cw2_two_samples(ad::constant(latents), generated, pooled_cfg(latents.cols()));
  LossParts parts;
  parts.latent = d2.item();
  parts.total = d2;
  return parts;
}

LossParts loss_lt(const Tensor& x, const Tensor& zprime, nets::ModelBundle& bundle,
                  const TrainConfig& cfg) {
  if (!bundle.latent_generator) throw ModelError("latent trick objective needs a latent generator");
  if (!bundle.encoder) throw ModelError("latent trick objective needs an encoder");
  // The encoder is frozen: its output enters as a constant.
  Tensor latents = nets::forward(*bundle.encoder, ad::constant(x), ad::Mode::eval).value();
  return loss_lt_latent(latents, zprime, *bundle.latent_generator, cfg);
}

LossParts loss_direct_generator(const Tensor& x, const Tensor& zprime, nets::Mlp& gen,
                                const TrainConfig& cfg, std::uint64_t dir_seed) {
  if (x.rows() != zprime.rows()) throw ShapeError("data batch and noise batch differ in size");
  auto generated = nets::forward(gen, ad::constant(zprime), ad::Mode::train);
  ad::Var d;
  if (cfg.objective == Objective::cw_gen) {
    d = cw::cw2_two_samples(ad::constant(x), generated, pooled_cfg(x.cols()));
  } else if (cfg.objective == Objective::sw_gen) {
    d = cw::sliced_wasserstein(ad::constant(x), generated, cfg.sw_num_dirs, dir_seed);
  } else {
    throw ConfigError("direct generator loss needs objective cw_gen or sw_gen");
  }
  LossParts parts;
  parts.rec = d.item();
  parts.total = d;
  return parts;
}

nets::ModelBundle initial_autoencoder(std::size_t data_dim, const TrainConfig& cfg) {
  nets::ModelBundle bundle;
  bundle.data_dim = data_dim;
  bundle.latent_dim = cfg.latent_dim;
  bundle.noise_dim = cfg.noise_dim;
  bundle.encoder = nets::build_encoder(data_dim, cfg.latent_dim, mix_seed(cfg.seed, kEncoderInit));
  bundle.decoder = nets::build_decoder(cfg.latent_dim, data_dim, mix_seed(cfg.seed, kDecoderInit),
                                       cfg.final_activation);
  return bundle;
}

TrainResult train_stage1(const data::Dataset& ds, const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  cfg.data_dim = ds.dim();
  cfg.validate();
  if (cfg.objective != Objective::ae && cfg.objective != Objective::cwae &&
      cfg.objective != Objective::cw2) {
    throw ConfigError("stage one trains ae, cwae or cw2, not " + to_string(cfg.objective));
  }
  const Tensor train = ds.train();
  if (train.rows() < cfg.batch_size) {
    throw DataError("training split has " + std::to_string(train.rows()) +
                    " points, fewer than batch_size " + std::to_string(cfg.batch_size));
  }
  const Tensor validation = ds.validation();

  TrainResult result;
  auto& bundle = result.bundle;
  bundle = initial_autoencoder(cfg.data_dim, cfg);
  std::vector<ad::Var> params = bundle.encoder->parameters();
  for (auto& p : bundle.decoder->parameters()) params.push_back(p);
  ad::AdamState adam;

  const auto start = Clock::now();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochTotals totals;
    for (const auto& idx : epoch_batches(train.rows(), cfg.batch_size, cfg.seed, epoch)) {
      Tensor x = take_rows(train, idx);
      LossParts parts;
      switch (cfg.objective) {
        case Objective::ae:
          parts = loss_ae(x, bundle, cfg);
          break;
        case Objective::cwae:
          parts = loss_cwae(x, bundle, cfg);
          break;
        default:
          parts = loss_cw2(x, bundle, cfg);
          break;
      }
      check_finite(parts, epoch);
      zero_grads(params);
      ad::backward(parts.total);
      optimizer_step(params, adam, cfg);
      totals.add(parts);
    }
    bundle.autoencoder_epochs = epoch;
    MetricsRecord rec = totals.record(epoch);
    if (eval_due(cfg, epoch)) {
      Tensor generated =
          sample(bundle, cfg.eval_samples, mix_seed(cfg.seed, kEvalSamples, epoch), SamplePath::prior);
      rec.frechet = eval::frechet_proxy(validation, generated);
    }
    if (cfg.record_wall_time) {
      rec.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
    }
    result.history.push_back(rec);
  }
  return result;
}

TrainResult train_stage2(const data::Dataset& ds, nets::ModelBundle bundle,
                         const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  cfg.objective = Objective::lt;
  cfg.data_dim = ds.dim();
  cfg.latent_dim = bundle.latent_dim;
  cfg.validate();
  if (!bundle.has_autoencoder() || bundle.autoencoder_epochs == 0) {
    throw ModelError("stage two needs a trained stage-one autoencoder");
  }
  if (bundle.data_dim != ds.dim()) {
    throw ShapeError("dataset dimension " + std::to_string(ds.dim()) +
                     " differs from the model's data_dim " + std::to_string(bundle.data_dim));
  }
  const Tensor train = ds.train();
  if (train.rows() < cfg.batch_size) {
    throw DataError("training split is smaller than batch_size");
  }
  const Tensor validation = ds.validation();
  // E is frozen, so the training set is encoded once.
  const Tensor latents = nets::predict(*bundle.encoder, train);

  bundle.noise_dim = cfg.noise_dim;
  bundle.latent_generator =
      nets::build_latent_generator(cfg.noise_dim, bundle.latent_dim,
                                   mix_seed(cfg.seed, kLatentGenInit), cfg.lg_width, cfg.lg_depth);
  bundle.latent_generator_epochs = 0;
  const std::vector<ad::Var> params = bundle.latent_generator->parameters();
  ad::AdamState adam;
  Rng noise_rng(mix_seed(cfg.seed, kNoise));

  TrainResult result;
  const auto start = Clock::now();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochTotals totals;
    for (const auto& idx : epoch_batches(latents.rows(), cfg.batch_size, cfg.seed, epoch)) {
      Tensor z = take_rows(latents, idx);
      Tensor zprime = normal_matrix(idx.size(), cfg.noise_dim, noise_rng);
      LossParts parts = loss_lt_latent(z, zprime, *bundle.latent_generator, cfg);
      check_finite(parts, epoch);
      zero_grads(params);
      ad::backward(parts.total);
      optimizer_step(params, adam, cfg);
      parts.rec = 0.0;
      totals.add(parts);
    }
    bundle.latent_generator_epochs = epoch;
    MetricsRecord rec = totals.record(epoch);
    if (eval_due(cfg, epoch)) {
      Tensor generated =
          sample(bundle, cfg.eval_samples, mix_seed(cfg.seed, kEvalSamples, epoch), SamplePath::lcw);
      rec.frechet = eval::frechet_proxy(validation, generated);
    }
    if (cfg.record_wall_time) {
      rec.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
    }
    result.history.push_back(rec);
  }
  result.bundle = std::move(bundle);
  return result;
}

TrainResult train_generator(const data::Dataset& ds, const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  cfg.data_dim = ds.dim();
  cfg.validate();
  if (cfg.objective != Objective::cw_gen && cfg.objective != Objective::sw_gen) {
    throw ConfigError("direct generator training needs objective cw_gen or sw_gen");
  }
  if (cfg.objective == Objective::cw_gen && cfg.data_dim < 2) {
    throw ConfigError("the Cramer-Wold distance needs data dimension >= 2");
  }
  const Tensor train = ds.train();
  if (train.rows() < cfg.batch_size) throw DataError("training split is smaller than batch_size");
  const Tensor validation = ds.validation();

  TrainResult result;
  auto& bundle = result.bundle;
  bundle.data_dim = cfg.data_dim;
  bundle.latent_dim = cfg.latent_dim;
  bundle.noise_dim = cfg.noise_dim;
  bundle.generator = nets::build_generator(cfg.noise_dim, cfg.data_dim,
                                           mix_seed(cfg.seed, kGeneratorInit), cfg.final_activation,
                                           cfg.lg_width, cfg.lg_depth);
  const std::vector<ad::Var> params = bundle.generator->parameters();
  ad::AdamState adam;
  Rng noise_rng(mix_seed(cfg.seed, kNoise));
  std::uint64_t step = 0;

  const auto start = Clock::now();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochTotals totals;
    for (const auto& idx : epoch_batches(train.rows(), cfg.batch_size, cfg.seed, epoch)) {
      Tensor x = take_rows(train, idx);
      Tensor zprime = normal_matrix(idx.size(), cfg.noise_dim, noise_rng);
      LossParts parts = loss_direct_generator(x, zprime, *bundle.generator, cfg,
                                              mix_seed(cfg.seed, kSlicedDirs, step++));
      check_finite(parts, epoch);
      zero_grads(params);
      ad::backward(parts.total);
      optimizer_step(params, adam, cfg);
      totals.add(parts);
    }
    bundle.generator_epochs = epoch;
    MetricsRecord rec = totals.record(epoch);
    if (eval_due(cfg, epoch)) {
      Tensor generated = sample(bundle, cfg.eval_samples, mix_seed(cfg.seed, kEvalSamples, epoch),
                                SamplePath::prior);
      rec.frechet = eval::frechet_proxy(validation, generated);
    }
    if (cfg.record_wall_time) {
      rec.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
    }
    result.history.push_back(rec);
  }
  return result;
}

std::string to_string(SamplePath p) { return p == SamplePath::prior ? "prior" : "lcw"; }

SamplePath sample_path_from_string(const std::string& s) {
  if (s == "prior") return SamplePath::prior;
  if (s == "lcw") return SamplePath::lcw;
  throw ConfigError("unknown sample path '" + s + "' (expected prior or lcw)");
}

Tensor sample(nets::ModelBundle& bundle, std::size_t n, std::uint64_t seed, SamplePath path) {
  if (n == 0) throw DataError("sample count must be positive");
  Rng rng(seed);
  if (path == SamplePath::lcw) {
    if (!bundle.latent_generator || !bundle.decoder) {
      throw ModelError("lcw sampling needs a latent generator and a decoder");
    }
    Tensor zprime = normal_matrix(n, bundle.noise_dim, rng);
    return nets::predict(*bundle.decoder, nets::predict(*bundle.latent_generator, zprime));
  }
  if (bundle.decoder) {
    return nets::predict(*bundle.decoder, normal_matrix(n, bundle.latent_dim, rng));
  }
  if (bundle.generator) {
    return nets::predict(*bundle.generator, normal_matrix(n, bundle.noise_dim, rng));
  }
  throw ModelError("bundle has neither a decoder nor a generator to sample from");
}

}  // namespace lcw::train
