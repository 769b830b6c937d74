#include "lcw/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "lcw/error.hpp"
#include "lcw/random.hpp"

namespace lcw::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

}  // namespace

RawConfig parse_config_text(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw[""];
  std::string section;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty() || section.find('.') != std::string::npos) {
        throw ConfigError(where + ": section names must be a single plain word");
      }
      raw[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    auto& slot = raw[section];
    if (slot.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    slot[key] = value;
  }
  return raw;
}

RawConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

bool is_image_preset(const std::string& preset) { return preset == "mnist" || preset == "fashion"; }

namespace {

std::string qualified(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

double to_double(const std::string& v, const std::string& key) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& v, const std::string& key) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

void apply_preset(RunConfig& cfg, const std::string& preset) {
  cfg.data.preset = preset;
  cfg.name = preset;
  auto& s1 = cfg.stage1;
  auto& s2 = cfg.stage2;
  auto& g = cfg.generator;
  s1.objective = train::Objective::cw2;
  s1.lr = 1e-3;
  s1.lambda = 1.0;
  s1.epochs = 100;
  s2.objective = train::Objective::lt;
  s2.lr = 5e-4;
  s2.epochs = 300;
  g.objective = train::Objective::cw_gen;
  g.lr = 1e-3;
  g.epochs = 300;
  for (auto* t : {&s1, &s2, &g}) t->batch_size = 128;

  if (is_image_preset(preset)) {
    for (auto* t : {&s1, &s2, &g}) {
      t->latent_dim = 8;
      t->noise_dim = 8;
      t->final_activation = nets::Activation::sigmoid;
      t->eval_every = 0;
    }
    cfg.data.limit = 10000;
    cfg.data.validation_fraction = 0.2;
  } else if (preset == "ring" || preset == "ring16" || preset == "moons" ||
             preset == "checkerboard" || preset == "file") {
    for (auto* t : {&s1, &s2, &g}) {
      t->latent_dim = 2;
      t->noise_dim = 2;
      t->final_activation = nets::Activation::linear;
    }
    s1.eval_every = 10;
    s2.eval_every = 10;
    g.eval_every = 10;
    s2.epochs = 20;
    g.epochs = 40;
    if (preset == "moons") cfg.data.n = 5000;
    if (preset == "checkerboard") cfg.data.n = 5000;
  } else {
    throw ConfigError("key 'preset': unknown preset '" + preset + "'");
  }
}

using Setter = std::function<void(const std::string& value, const std::string& key)>;

void apply_train_keys(std::map<std::string, Setter>& setters, train::TrainConfig& t,
                      bool stage1_keys, bool generator_keys, bool latent_gen_keys) {
  setters["lr"] = [&t](auto& v, auto& k) { t.lr = to_double(v, k); };
  setters["batch_size"] = [&t](auto& v, auto& k) { t.batch_size = to_uint(v, k); };
  setters["epochs"] = [&t](auto& v, auto& k) { t.epochs = to_uint(v, k); };
  setters["eval_every"] = [&t](auto& v, auto& k) { t.eval_every = to_uint(v, k); };
  setters["eval_samples"] = [&t](auto& v, auto& k) { t.eval_samples = to_uint(v, k); };
  setters["clip_norm"] = [&t](auto& v, auto& k) { t.clip_norm = to_double(v, k); };
  if (stage1_keys) {
    setters["objective"] = [&t](auto& v, auto& k) {
      if (v != "ae" && v != "cwae" && v != "cw2") {
        throw ConfigError("key '" + k + "': stage one objective must be ae, cwae or cw2");
      }
      t.objective = train::objective_from_string(v);
    };
    setters["lambda"] = [&t](auto& v, auto& k) { t.lambda = to_double(v, k); };
    setters["log_both"] = [&t](auto& v, auto& k) { t.log_both = to_bool(v, k); };
  }
  if (generator_keys) {
    setters["distance"] = [&t](auto& v, auto& k) {
      if (v == "cw") {
        t.objective = train::Objective::cw_gen;
      } else if (v == "sw") {
        t.objective = train::Objective::sw_gen;
      } else {
        throw ConfigError("key '" + k + "': distance must be cw or sw");
      }
    };
    setters["sw_dirs"] = [&t](auto& v, auto& k) { t.sw_num_dirs = to_uint(v, k); };
  }
  if (generator_keys || latent_gen_keys) {
    setters["width"] = [&t](auto& v, auto& k) { t.lg_width = to_uint(v, k); };
    setters["depth"] = [&t](auto& v, auto& k) { t.lg_depth = to_uint(v, k); };
  }
}

}  // namespace

RunConfig build_run_config(const RawConfig& raw) {
  const auto top = raw.find("");
  if (top == raw.end() || !top->second.count("preset")) {
    throw ConfigError("missing required key 'preset'");
  }
  RunConfig cfg;
  apply_preset(cfg, top->second.at("preset"));

  std::map<std::string, std::map<std::string, Setter>> setters;
  auto& t = setters[""];
  t["preset"] = [](auto&, auto&) {};
  t["name"] = [&cfg](auto& v, auto&) { cfg.name = v; };
  t["output_dir"] = [&cfg](auto& v, auto&) { cfg.output_dir = v; };
  t["seed"] = [&cfg](auto& v, auto& k) { cfg.seed = to_uint(v, k); };
  t["latent_dim"] = [&cfg](auto& v, auto& k) {
    for (auto* s : {&cfg.stage1, &cfg.stage2, &cfg.generator}) s->latent_dim = to_uint(v, k);
  };
  t["noise_dim"] = [&cfg](auto& v, auto& k) {
    for (auto* s : {&cfg.stage1, &cfg.stage2, &cfg.generator}) s->noise_dim = to_uint(v, k);
  };
  t["final_activation"] = [&cfg](auto& v, auto& k) {
    nets::Activation a;
    try {
      a = nets::activation_from_string(v);
    } catch (const Error&) {
      throw ConfigError("key '" + k + "': unknown activation '" + v + "'");
    }
    for (auto* s : {&cfg.stage1, &cfg.stage2, &cfg.generator}) s->final_activation = a;
  };
  t["record_wall_time"] = [&cfg](auto& v, auto& k) {
    for (auto* s : {&cfg.stage1, &cfg.stage2, &cfg.generator}) s->record_wall_time = to_bool(v, k);
  };
  t["data_path"] = [&cfg](auto& v, auto&) { cfg.data.path = v; };
  t["labels_path"] = [&cfg](auto& v, auto&) { cfg.data.labels_path = v; };
  t["limit"] = [&cfg](auto& v, auto& k) { cfg.data.limit = to_uint(v, k); };
  t["validation_fraction"] = [&cfg](auto& v, auto& k) {
    cfg.data.validation_fraction = to_double(v, k);
  };
  t["n"] = [&cfg](auto& v, auto& k) { cfg.data.n = to_uint(v, k); };
  t["modes"] = [&cfg](auto& v, auto& k) { cfg.data.modes = to_uint(v, k); };
  t["radius"] = [&cfg](auto& v, auto& k) { cfg.data.radius = to_double(v, k); };
  t["std"] = [&cfg](auto& v, auto& k) { cfg.data.std_dev = to_double(v, k); };
  t["noise_std"] = [&cfg](auto& v, auto& k) { cfg.data.noise_std = to_double(v, k); };
  t["grid"] = [&cfg](auto& v, auto& k) { cfg.data.grid = to_uint(v, k); };
  t["embed_dim"] = [&cfg](auto& v, auto& k) { cfg.data.embed_dim = to_uint(v, k); };
  t["data_seed"] = [&cfg](auto& v, auto& k) { cfg.data.seed = to_uint(v, k); };

  apply_train_keys(setters["stage1"], cfg.stage1, true, false, false);
  apply_train_keys(setters["stage2"], cfg.stage2, false, false, true);
  apply_train_keys(setters["generator"], cfg.generator, false, true, false);
  auto& e = setters["eval"];
  e["samples"] = [&cfg](auto& v, auto& k) { cfg.eval.samples = to_uint(v, k); };
  e["coverage_radius"] = [&cfg](auto& v, auto& k) { cfg.eval.coverage_radius = to_double(v, k); };
  e["min_mode_fraction"] = [&cfg](auto& v, auto& k) {
    cfg.eval.min_mode_fraction = to_double(v, k);
  };
  e["frechet"] = [&cfg](auto& v, auto& k) { cfg.eval.frechet = to_bool(v, k); };

  // Top-level keys first so that section entries win over broadcast values.
  std::vector<std::string> order{""};
  for (const auto& [section, _] : raw) {
    if (!section.empty()) order.push_back(section);
  }
  for (const auto& section : order) {
    const auto sit = setters.find(section);
    if (sit == setters.end()) throw ConfigError("unknown section '[" + section + "]'");
    for (const auto& [key, value] : raw.at(section)) {
      const auto kit = sit->second.find(key);
      if (kit == sit->second.end()) {
        throw ConfigError("unknown key '" + qualified(section, key) + "'");
      }
      kit->second(value, qualified(section, key));
    }
  }
  for (auto* s : {&cfg.stage1, &cfg.stage2, &cfg.generator}) s->seed = cfg.seed;
  if (cfg.data.seed == 0) cfg.data.seed = cfg.seed;
  if ((is_image_preset(cfg.data.preset) || cfg.data.preset == "file") && cfg.data.path.empty()) {
    throw ConfigError("missing required key 'data_path' for preset '" + cfg.data.preset + "'");
  }
  cfg.stage1.validate();
  auto s2 = cfg.stage2;
  s2.objective = train::Objective::lt;
  s2.validate();
  cfg.generator.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return build_run_config(parse_config_file(path));
}

data::Dataset load_dataset(const DataConfig& cfg) {
  data::Dataset ds;
  const auto& p = cfg.preset;
  if (p == "ring") {
    ds = data::gaussian_ring(cfg.modes, cfg.radius, cfg.std_dev, cfg.n, cfg.seed);
  } else if (p == "ring16") {
    ds = data::embed_rotated(data::gaussian_ring(cfg.modes, cfg.radius, cfg.std_dev, cfg.n, cfg.seed),
                             cfg.embed_dim, 0x5eed16);
  } else if (p == "moons") {
    ds = data::two_moons(cfg.n, cfg.noise_std, cfg.seed);
  } else if (p == "checkerboard") {
    ds = data::checkerboard(cfg.n, cfg.grid, cfg.seed);
  } else if (is_image_preset(p)) {
    std::optional<std::filesystem::path> labels;
    if (!cfg.labels_path.empty()) labels = cfg.labels_path;
    ds = data::load_idx(cfg.path, labels, cfg.limit);
    ds.name = p;
  } else if (p == "file") {
    ds.name = std::filesystem::path(cfg.path).stem().string();
    ds.points = data::read_points(cfg.path);
  } else {
    throw ConfigError("unknown preset '" + p + "'");
  }
  return data::split(std::move(ds), cfg.validation_fraction, lcw::mix_seed(cfg.seed, 77));
}

}  // namespace lcw::cli
