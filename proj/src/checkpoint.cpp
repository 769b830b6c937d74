#include "lcw/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcw/error.hpp"

namespace lcw::cli {

using nlohmann::json;

namespace {

json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j) {
  Tensor t;
  t.shape = j.at("shape").get<std::vector<std::size_t>>();
  t.data = j.at("data").get<std::vector<double>>();
  if (t.data.size() != shape_product(t.shape))
    throw FormatError("checkpoint tensor of shape " + shape_string(t.shape) + " has " +
                      std::to_string(t.data.size()) + " values");
  return t;
}

json mlp_to_json(const nets::Mlp& net) {
  json spec_layers = json::array();
  for (const auto& l : net.spec.layers)
    spec_layers.push_back(
        {{"width", l.width}, {"activation", nets::to_string(l.activation)}, {"batchnorm", l.batchnorm}});
  json layers = json::array();
  for (const auto& l : net.layers) {
    json jl{{"weight", tensor_to_json(l.weight.value())}, {"bias", tensor_to_json(l.bias.value())}};
    if (l.bn) {
      jl["bn"] = {{"gamma", tensor_to_json(l.bn->gamma.value())},
                  {"beta", tensor_to_json(l.bn->beta.value())},
                  {"running_mean", tensor_to_json(l.bn->running_mean)},
                  {"running_var", tensor_to_json(l.bn->running_var)},
                  {"momentum", l.bn->momentum},
                  {"eps", l.bn->eps}};
    }
    layers.push_back(std::move(jl));
  }
  return json{{"spec", {{"input_dim", net.spec.input_dim}, {"layers", spec_layers}}},
              {"layers", layers}};
}

void expect_shape(const Tensor& t, std::vector<std::size_t> shape, const char* what) {
  if (t.shape != shape)
    throw FormatError(std::string("checkpoint ") + what + " has shape " + shape_string(t.shape) +
                      ", expected " + shape_string(shape));
}

nets::Mlp mlp_from_json(const json& j) {
  nets::Mlp net;
  const auto& js = j.at("spec");
  net.spec.input_dim = js.at("input_dim").get<std::size_t>();
  for (const auto& jl : js.at("layers")) {
    nets::LayerSpec l;
    l.width = jl.at("width").get<std::size_t>();
    l.activation = nets::activation_from_string(jl.at("activation").get<std::string>());
    l.batchnorm = jl.at("batchnorm").get<bool>();
    net.spec.layers.push_back(l);
  }
  try {
    net.spec.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint network spec: ") + e.what());
  }
  const auto& jlayers = j.at("layers");
  if (jlayers.size() != net.spec.layers.size())
    throw FormatError("checkpoint network has mismatched layer count");
  std::size_t fan_in = net.spec.input_dim;
  for (std::size_t i = 0; i < jlayers.size(); ++i) {
    const auto& jl = jlayers[i];
    const auto& ls = net.spec.layers[i];
    nets::Layer layer;
    Tensor w = tensor_from_json(jl.at("weight"));
    Tensor b = tensor_from_json(jl.at("bias"));
    expect_shape(w, {fan_in, ls.width}, "weight");
    expect_shape(b, {1, ls.width}, "bias");
    layer.weight = ad::parameter(std::move(w));
    layer.bias = ad::parameter(std::move(b));
    if (ls.batchnorm) {
      const auto& jb = jl.at("bn");
      auto bn = ad::BatchNormState::make(ls.width);
      Tensor gamma = tensor_from_json(jb.at("gamma"));
      Tensor beta = tensor_from_json(jb.at("beta"));
      bn.running_mean = tensor_from_json(jb.at("running_mean"));
      bn.running_var = tensor_from_json(jb.at("running_var"));
      expect_shape(gamma, {1, ls.width}, "bn gamma");
      expect_shape(beta, {1, ls.width}, "bn beta");
      expect_shape(bn.running_mean, {1, ls.width}, "bn running mean");
      expect_shape(bn.running_var, {1, ls.width}, "bn running var");
      bn.gamma = ad::parameter(std::move(gamma));
      bn.beta = ad::parameter(std::move(beta));
      bn.momentum = jb.at("momentum").get<double>();
      bn.eps = jb.at("eps").get<double>();
      layer.bn = std::move(bn);
    }
    net.layers.push_back(std::move(layer));
    fan_in = ls.width;
  }
  return net;
}

json config_to_json(const train::TrainConfig& c) {
  return json{{"objective", train::to_string(c.objective)},
              {"lr", c.lr},
              {"lambda", c.lambda},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"data_dim", c.data_dim},
              {"latent_dim", c.latent_dim},
              {"noise_dim", c.noise_dim},
              {"seed", c.seed},
              {"sw_num_dirs", c.sw_num_dirs},
              {"eval_every", c.eval_every},
              {"eval_samples", c.eval_samples},
              {"clip_norm", c.clip_norm},
              {"log_both", c.log_both},
              {"final_activation", nets::to_string(c.final_activation)},
              {"lg_width", c.lg_width},
              {"lg_depth", c.lg_depth},
              {"record_wall_time", c.record_wall_time}};
}

train::TrainConfig config_from_json(const json& j) {
  train::TrainConfig c;
  c.objective = train::objective_from_string(j.at("objective").get<std::string>());
  c.lr = j.at("lr").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.data_dim = j.at("data_dim").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.noise_dim = j.at("noise_dim").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.sw_num_dirs = j.at("sw_num_dirs").get<std::size_t>();
  c.eval_every = j.at("eval_every").get<std::size_t>();
  c.eval_samples = j.at("eval_samples").get<std::size_t>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.log_both = j.at("log_both").get<bool>();
  c.final_activation = nets::activation_from_string(j.at("final_activation").get<std::string>());
  c.lg_width = j.at("lg_width").get<std::size_t>();
  c.lg_depth = j.at("lg_depth").get<std::size_t>();
  c.record_wall_time = j.at("record_wall_time").get<bool>();
  return c;
}

json metrics_to_json(const std::vector<train::MetricsRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    json jr{{"epoch", r.epoch},
            {"loss", r.loss},
            {"rec_term", r.rec_term},
            {"latent_term", r.latent_term},
            {"wall_s", r.wall_s}};
    jr["frechet"] = r.frechet ? json(*r.frechet) : json(nullptr);
    out.push_back(std::move(jr));
  }
  return out;
}

std::vector<train::MetricsRecord> metrics_from_json(const json& j) {
  std::vector<train::MetricsRecord> out;
  for (const auto& jr : j) {
    train::MetricsRecord r;
    r.epoch = jr.at("epoch").get<std::size_t>();
    r.loss = jr.at("loss").get<double>();
    r.rec_term = jr.at("rec_term").get<double>();
    r.latent_term = jr.at("latent_term").get<double>();
    r.wall_s = jr.at("wall_s").get<double>();
    if (!jr.at("frechet").is_null()) r.frechet = jr.at("frechet").get<double>();
    out.push_back(r);
  }
  return out;
}

json data_to_json(const DataConfig& d) {
  json j{{"preset", d.preset},
         {"path", d.path},
         {"labels_path", d.labels_path},
         {"validation_fraction", d.validation_fraction},
         {"n", d.n},
         {"modes", d.modes},
         {"radius", d.radius},
         {"std", d.std_dev},
         {"noise_std", d.noise_std},
         {"grid", d.grid},
         {"embed_dim", d.embed_dim},
         {"seed", d.seed}};
  j["limit"] = d.limit ? json(*d.limit) : json(nullptr);
  return j;
}

DataConfig data_from_json(const json& j) {
  DataConfig d;
  d.preset = j.at("preset").get<std::string>();
  d.path = j.at("path").get<std::string>();
  d.labels_path = j.at("labels_path").get<std::string>();
  d.validation_fraction = j.at("validation_fraction").get<double>();
  d.n = j.at("n").get<std::size_t>();
  d.modes = j.at("modes").get<std::size_t>();
  d.radius = j.at("radius").get<double>();
  d.std_dev = j.at("std").get<double>();
  d.noise_std = j.at("noise_std").get<double>();
  d.grid = j.at("grid").get<std::size_t>();
  d.embed_dim = j.at("embed_dim").get<std::size_t>();
  d.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("limit").is_null()) d.limit = j.at("limit").get<std::size_t>();
  return d;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& b = ckpt.bundle;
  json networks = json::object();
  if (b.encoder) networks["encoder"] = mlp_to_json(*b.encoder);
  if (b.decoder) networks["decoder"] = mlp_to_json(*b.decoder);
  if (b.latent_generator) networks["latent_generator"] = mlp_to_json(*b.latent_generator);
  if (b.generator) networks["generator"] = mlp_to_json(*b.generator);

  json configs = json::object();
  for (const auto& [k, c] : ckpt.configs) configs[k] = config_to_json(c);
  json metrics = json::object();
  for (const auto& [k, m] : ckpt.metrics) metrics[k] = metrics_to_json(m);

  json j{{"format", kCheckpointFormat},
         {"run_name", ckpt.run_name},
         {"dataset", ckpt.dataset_preset},
         {"data", data_to_json(ckpt.data)},
         {"dims", {{"data", b.data_dim}, {"latent", b.latent_dim}, {"noise", b.noise_dim}}},
         {"epochs",
          {{"autoencoder", b.autoencoder_epochs},
           {"latent_generator", b.latent_generator_epochs},
           {"generator", b.generator_epochs}}},
         {"rng", {{"seed", ckpt.seed}, {"engine", "mt19937_64"}}},
         {"networks", networks},
         {"configs", configs},
         {"metrics", metrics}};
  j["image_shape"] = ckpt.image_shape
                         ? json::array({ckpt.image_shape->first, ckpt.image_shape->second})
                         : json(nullptr);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format") || !j["format"].is_string())
    throw FormatError("checkpoint has no format tag");
  const auto format = j["format"].get<std::string>();
  if (format != kCheckpointFormat)
    throw FormatError("unsupported checkpoint format '" + format + "' (expected " +
                      kCheckpointFormat + ")");
  try {
    Checkpoint c;
    c.run_name = j.at("run_name").get<std::string>();
    c.dataset_preset = j.at("dataset").get<std::string>();
    c.data = data_from_json(j.at("data"));
    c.seed = j.at("rng").at("seed").get<std::uint64_t>();
    const auto& dims = j.at("dims");
    c.bundle.data_dim = dims.at("data").get<std::size_t>();
    c.bundle.latent_dim = dims.at("latent").get<std::size_t>();
    c.bundle.noise_dim = dims.at("noise").get<std::size_t>();
    const auto& ep = j.at("epochs");
    c.bundle.autoencoder_epochs = ep.at("autoencoder").get<std::size_t>();
    c.bundle.latent_generator_epochs = ep.at("latent_generator").get<std::size_t>();
    c.bundle.generator_epochs = ep.at("generator").get<std::size_t>();
    const auto& nw = j.at("networks");
    if (nw.contains("encoder")) c.bundle.encoder = mlp_from_json(nw["encoder"]);
    if (nw.contains("decoder")) c.bundle.decoder = mlp_from_json(nw["decoder"]);
    if (nw.contains("latent_generator"))
      c.bundle.latent_generator = mlp_from_json(nw["latent_generator"]);
    if (nw.contains("generator")) c.bundle.generator = mlp_from_json(nw["generator"]);
    for (const auto& [k, v] : j.at("configs").items()) c.configs[k] = config_from_json(v);
    for (const auto& [k, v] : j.at("metrics").items()) c.metrics[k] = metrics_from_json(v);
    const auto& is = j.at("image_shape");
    if (!is.is_null())
      c.image_shape = std::make_pair(is.at(0).get<std::size_t>(), is.at(1).get<std::size_t>());
    c.bundle.validate();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << checkpoint_to_json(ckpt);
  if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace lcw::cli
