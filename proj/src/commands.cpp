#include "lcw/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "lcw/checkpoint.hpp"
#include "lcw/config.hpp"
#include "lcw/cwdist.hpp"
#include "lcw/datasets.hpp"
#include "lcw/error.hpp"
#include "lcw/eval.hpp"
#include "lcw/plot.hpp"
#include "lcw/random.hpp"

namespace lcw::cli {

namespace {

enum Stream : std::uint64_t { kInterpEndpoints = 11 };

std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

fs::path with_suffix(const fs::path& stem, const std::string& suffix) {
  return fs::path(stem.string() + suffix);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw DataError("cannot create directory " + p.parent_path().string());
  }
}

RunConfig load_config(const fs::path& path, bool no_wall_time) {
  RunConfig cfg = load_run_config(path);
  if (no_wall_time) {
    for (auto* s : {&cfg.stage1, &cfg.stage2, &cfg.generator}) s->record_wall_time = false;
  }
  return cfg;
}

Tensor head_rows(const Tensor& t, std::size_t n) {
  std::vector<std::size_t> idx(std::min(n, t.rows()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return take_rows(t, idx);
}

void emit_sample_plots(const fs::path& stem, const Tensor& samples, const Checkpoint& ckpt,
                       const std::string& title, std::ostream& log) {
  if (ckpt.image_shape) {
    const fs::path p = with_suffix(stem, ".pgm");
    plot::write_pgm(p, head_rows(samples, 100), ckpt.image_shape->first, ckpt.image_shape->second);
    log << "wrote " << p.string() << "\n";
  } else if (samples.cols() == 2) {
    const fs::path p = with_suffix(stem, ".svg");
    plot::write_svg(p, {{samples, "#1f77b4", "samples", 1.2, false}}, title);
    log << "wrote " << p.string() << "\n";
  }
}

Checkpoint base_checkpoint(const RunConfig& cfg, const data::Dataset& ds) {
  Checkpoint c;
  c.run_name = cfg.name;
  c.dataset_preset = cfg.data.preset;
  c.data = cfg.data;
  c.image_shape = ds.image_shape;
  c.seed = cfg.seed;
  return c;
}

void check_same_dims(const train::TrainConfig& cfg, const nets::ModelBundle& bundle) {
  if (cfg.latent_dim != bundle.latent_dim) {
    throw ShapeError("config latent_dim " + std::to_string(cfg.latent_dim) +
                     " differs from the checkpoint's " + std::to_string(bundle.latent_dim));
  }
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const FormatError*>(&e)) return 3;
  if (dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const ModelError*>(&e)) return 4;
  return 1;
}

void write_metrics_csv(const fs::path& path, const std::vector<train::MetricsRecord>& history,
                       const std::string& frechet_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,loss,rec_term,latent_term," << frechet_column << ",wall_s\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << num(r.loss) << ',' << num(r.rec_term) << ',' << num(r.latent_term)
        << ',' << opt_num(r.frechet) << ',' << num(r.wall_s) << '\n';
  }
}

fs::path artifact_stem(const fs::path& ckpt) {
  const std::string s = ckpt.string();
  const std::string tag = ".ckpt.json";
  if (s.size() > tag.size() && s.compare(s.size() - tag.size(), tag.size(), tag) == 0) {
    return fs::path(s.substr(0, s.size() - tag.size()));
  }
  fs::path p = ckpt;
  return p.replace_extension();
}

fs::path cmd_train_stage1(const Stage1Args& args, std::ostream& log) {
  RunConfig cfg = load_config(args.config, args.no_wall_time);
  if (args.objective) {
    const auto& o = *args.objective;
    if (o != "ae" && o != "cwae" && o != "cw2") {
      throw ConfigError("--objective must be ae, cwae or cw2, got '" + o + "'");
    }
    cfg.stage1.objective = train::objective_from_string(o);
  }
  const data::Dataset ds = load_dataset(cfg.data);
  const std::string objective = train::to_string(cfg.stage1.objective);
  const fs::path ckpt_path =
      args.out ? *args.out : cfg.output_dir / (cfg.name + "_" + objective + ".ckpt.json");
  ensure_parent(ckpt_path);
  const fs::path stem = artifact_stem(ckpt_path);

  log << "stage 1 (" << objective << ") on " << ds.name << ": " << ds.train_indices.size()
      << " train / " << ds.validation_indices.size() << " validation points\n";
  train::TrainResult res = train::train_stage1(ds, cfg.stage1);

  Checkpoint ckpt = base_checkpoint(cfg, ds);
  ckpt.bundle = std::move(res.bundle);
  ckpt.configs["stage1"] = cfg.stage1;
  ckpt.configs["stage1"].data_dim = ds.dim();
  ckpt.metrics["stage1"] = res.history;
  save_checkpoint(ckpt_path, ckpt);
  write_metrics_csv(with_suffix(stem, ".metrics.csv"), res.history, "frechet_prior");
  log << "wrote " << ckpt_path.string() << "\n";

  if (ckpt.bundle.latent_dim == 2) {
    Tensor z = nets::predict(*ckpt.bundle.encoder, ds.validation());
    const fs::path p = with_suffix(stem, ".latent.svg");
    plot::write_svg(p, {{z, "#1f77b4", "encoded", 1.2, false}},
                    "encoded validation data (" + objective + ")");
    log << "wrote " << p.string() << "\n";
  }
  if (ckpt.image_shape) {
    Tensor s = train::sample(ckpt.bundle, 100, mix_seed(cfg.seed, 91), train::SamplePath::prior);
    emit_sample_plots(with_suffix(stem, ".samples"), s, ckpt, "prior samples", log);
  }
  return ckpt_path;
}

fs::path cmd_train_stage2(const Stage2Args& args, std::ostream& log) {
  RunConfig cfg = load_config(args.config, args.no_wall_time);
  Checkpoint ckpt = load_checkpoint(args.ckpt);
  if (!ckpt.bundle.has_autoencoder()) {
    throw ModelError("stage two needs a checkpoint with an encoder and decoder");
  }
  check_same_dims(cfg.stage2, ckpt.bundle);
  const data::Dataset ds = load_dataset(cfg.data);
  if (ds.dim() != ckpt.bundle.data_dim) {
    throw ShapeError("dataset dimension " + std::to_string(ds.dim()) +
                     " differs from the checkpoint's data_dim " +
                     std::to_string(ckpt.bundle.data_dim));
  }
  const fs::path ckpt_path =
      args.out ? *args.out
               : cfg.output_dir / (artifact_stem(args.ckpt).filename().string() + "_lt.ckpt.json");
  ensure_parent(ckpt_path);
  const fs::path stem = artifact_stem(ckpt_path);

  log << "stage 2 (latent generator " << cfg.stage2.noise_dim << " -> " << ckpt.bundle.latent_dim
      << ")\n";
  train::TrainConfig s2 = cfg.stage2;
  s2.objective = train::Objective::lt;
  train::TrainResult res = train::train_stage2(ds, std::move(ckpt.bundle), s2);
  ckpt.bundle = std::move(res.bundle);
  s2.data_dim = ds.dim();
  s2.latent_dim = ckpt.bundle.latent_dim;
  ckpt.configs["stage2"] = s2;
  ckpt.metrics["stage2"] = res.history;
  save_checkpoint(ckpt_path, ckpt);
  write_metrics_csv(with_suffix(stem, ".metrics.csv"), res.history, "frechet_lcw");
  log << "wrote " << ckpt_path.string() << "\n";

  if (ckpt.bundle.latent_dim == 2) {
    Tensor z = nets::predict(*ckpt.bundle.encoder, ds.validation());
    Rng rng(mix_seed(cfg.seed, 92));
    Tensor zp = normal_matrix(z.rows(), ckpt.bundle.noise_dim, rng);
    Tensor lg = nets::predict(*ckpt.bundle.latent_generator, zp);
    const fs::path p = with_suffix(stem, ".latent.svg");
    plot::write_svg(p,
                    {{z, "#bbbbbb", "encoded", 1.2, false}, {lg, "#d62728", "generated", 1.2, false}},
                    "latent generator output over encoded data");
    log << "wrote " << p.string() << "\n";
  }
  if (ckpt.image_shape) {
    Tensor s = train::sample(ckpt.bundle, 100, mix_seed(cfg.seed, 93), train::SamplePath::lcw);
    emit_sample_plots(with_suffix(stem, ".samples"), s, ckpt, "lcw samples", log);
  }
  return ckpt_path;
}

fs::path cmd_train_generator(const GeneratorArgs& args, std::ostream& log) {
  RunConfig cfg = load_config(args.config, args.no_wall_time);
  if (args.distance) {
    if (*args.distance == "cw") {
      cfg.generator.objective = train::Objective::cw_gen;
    } else if (*args.distance == "sw") {
      cfg.generator.objective = train::Objective::sw_gen;
    } else {
      throw ConfigError("--distance must be cw or sw, got '" + *args.distance + "'");
    }
  }
  if (args.sw_dirs) {
    if (*args.sw_dirs == 0) throw ConfigError("--sw-dirs must be positive");
    cfg.generator.sw_num_dirs = *args.sw_dirs;
  }
  const data::Dataset ds = load_dataset(cfg.data);
  const std::string objective = train::to_string(cfg.generator.objective);
  const fs::path ckpt_path =
      args.out ? *args.out : cfg.output_dir / (cfg.name + "_" + objective + ".ckpt.json");
  ensure_parent(ckpt_path);
  const fs::path stem = artifact_stem(ckpt_path);

  log << "direct generator (" << objective << ") on " << ds.name << "\n";
  train::TrainResult res = train::train_generator(ds, cfg.generator);
  Checkpoint ckpt = base_checkpoint(cfg, ds);
  ckpt.bundle = std::move(res.bundle);
  ckpt.configs["generator"] = cfg.generator;
  ckpt.configs["generator"].data_dim = ds.dim();
  ckpt.metrics["generator"] = res.history;
  save_checkpoint(ckpt_path, ckpt);
  write_metrics_csv(with_suffix(stem, ".metrics.csv"), res.history, "frechet_gen");
  log << "wrote " << ckpt_path.string() << "\n";

  Tensor s = train::sample(ckpt.bundle, ckpt.image_shape ? 100 : 2000, mix_seed(cfg.seed, 94),
                           train::SamplePath::prior);
  emit_sample_plots(with_suffix(stem, ".samples"), s, ckpt, objective + " samples", log);
  return ckpt_path;
}

fs::path cmd_sample(const SampleArgs& args, std::ostream& log) {
  Checkpoint ckpt = load_checkpoint(args.ckpt);
  const train::SamplePath path = train::sample_path_from_string(args.path);
  const fs::path stem =
      args.out ? artifact_stem(*args.out)
               : fs::path(artifact_stem(args.ckpt).string() + "_" + args.path + "_s" +
                          std::to_string(args.seed));
  ensure_parent(stem);
  Tensor s = train::sample(ckpt.bundle, args.n, args.seed, path);
  const fs::path bin = with_suffix(stem, ".bin");
  data::write_raw(bin, s);
  log << "wrote " << bin.string() << "\n";
  emit_sample_plots(stem, s, ckpt, args.path + " samples (seed " + std::to_string(args.seed) + ")",
                    log);
  return bin;
}

fs::path cmd_interpolate(const InterpolateArgs& args, std::ostream& log) {
  Checkpoint ckpt = load_checkpoint(args.ckpt);
  const auto mode = eval::interpolation_mode_from_string(args.mode);
  if (args.steps < 2) throw ConfigError("--steps must be at least 2");
  auto& b = ckpt.bundle;
  if (!b.latent_generator || !b.decoder) {
    throw ModelError("interpolation needs a checkpoint with a latent generator");
  }
  Rng rng(mix_seed(args.seed, kInterpEndpoints));
  Tensor ends = normal_matrix(2, b.noise_dim, rng);
  Tensor start = Tensor::matrix(1, b.noise_dim, std::vector<double>(ends.data.begin(), ends.data.begin() + b.noise_dim));
  Tensor end = Tensor::matrix(1, b.noise_dim, std::vector<double>(ends.data.begin() + b.noise_dim, ends.data.end()));

  eval::InterpolationPath chosen = eval::interpolate(b, start, end, args.steps, mode);
  const auto other_mode = mode == eval::InterpolationMode::density_based
                              ? eval::InterpolationMode::linear_latent
                              : eval::InterpolationMode::density_based;
  eval::InterpolationPath other = eval::interpolate(b, start, end, args.steps, other_mode);

  const data::Dataset ds = load_dataset(ckpt.data);
  if (ds.dim() != b.data_dim) throw ShapeError("checkpoint dataset no longer matches the model");
  const Tensor latents = nets::predict(*b.encoder, ds.train());

  const fs::path stem =
      args.out ? artifact_stem(*args.out)
               : fs::path(artifact_stem(args.ckpt).string() + "_interp_" + args.mode + "_s" +
                          std::to_string(args.seed));
  ensure_parent(stem);
  data::write_raw(with_suffix(stem, ".bin"), chosen.decoded);

  const fs::path csv = with_suffix(stem, ".csv");
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw DataError("cannot write " + csv.string());
    out << "step,alpha,nearest_latent_distance\n";
    for (std::size_t i = 0; i < chosen.steps; ++i) {
      std::vector<std::size_t> one{i};
      double d = eval::mean_nearest_distance(take_rows(chosen.latent, one), latents);
      out << i << ',' << num(chosen.alphas[i]) << ',' << num(d) << '\n';
    }
  }
  const double mean_chosen = eval::mean_nearest_distance(chosen.latent, latents);
  const double mean_other = eval::mean_nearest_distance(other.latent, latents);
  log << "mean nearest latent distance: " << args.mode << " " << num(mean_chosen) << ", "
      << eval::to_string(other_mode) << " " << num(mean_other) << "\n";
  log << "wrote " << csv.string() << "\n";

  if (b.latent_dim == 2) {
    const fs::path p = with_suffix(stem, ".svg");
    const bool density = mode == eval::InterpolationMode::density_based;
    const Tensor& dens = density ? chosen.latent : other.latent;
    const Tensor& lin = density ? other.latent : chosen.latent;
    plot::write_svg(p,
                    {{latents, "#cccccc", "encoded", 1.0, false},
                     {lin, "#d62728", "linear", 2.5, true},
                     {dens, "#2ca02c", "density", 2.5, true}},
                    "interpolation in latent space (red linear, green density)");
    log << "wrote " << p.string() << "\n";
  }
  if (ckpt.image_shape) {
    const fs::path p = with_suffix(stem, ".pgm");
    plot::write_pgm(p, chosen.decoded, ckpt.image_shape->first, ckpt.image_shape->second,
                    std::min<std::size_t>(args.steps, 10));
    log << "wrote " << p.string() << "\n";
  } else if (b.data_dim == 2) {
    const fs::path p = with_suffix(stem, ".data.svg");
    plot::write_svg(p,
                    {{head_rows(ds.points, 2000), "#cccccc", "data", 1.0, false},
                     {chosen.decoded, "#2ca02c", args.mode, 2.5, true}},
                    "decoded interpolation path (" + args.mode + ")");
    log << "wrote " << p.string() << "\n";
  }
  return csv;
}

namespace {

data::Dataset eval_dataset(const std::string& spec, const Checkpoint& ckpt) {
  if (spec.empty()) return load_dataset(ckpt.data);
  static const std::vector<std::string> presets{"ring",  "ring16", "moons",
                                                "checkerboard", "mnist", "fashion"};
  if (std::find(presets.begin(), presets.end(), spec) != presets.end()) {
    if (spec == ckpt.data.preset) return load_dataset(ckpt.data);
    RawConfig raw;
    raw[""]["preset"] = spec;
    if (is_image_preset(spec)) {
      if (!is_image_preset(ckpt.data.preset)) {
        throw ConfigError("preset '" + spec + "' needs a data path; pass the IDX file instead");
      }
      raw[""]["data_path"] = ckpt.data.path;
    }
    return load_dataset(build_run_config(raw).data);
  }
  const fs::path p(spec);
  if (!fs::exists(p)) throw DataError("--data: no preset or file named '" + spec + "'");
  const auto ext = p.extension().string();
  if (ext == ".toml" || ext == ".cfg" || ext == ".conf" || ext == ".ini") {
    return load_dataset(load_run_config(p).data);
  }
  data::Dataset ds;
  if (ext == ".bin" || ext == ".csv" || ext == ".txt") {
    ds.name = p.stem().string();
    ds.points = data::read_points(p);
  } else {
    ds = data::load_idx(p);
  }
  return ds;
}

}  // namespace

fs::path cmd_eval(const EvalArgs& args, std::ostream& log) {
  Checkpoint ckpt = load_checkpoint(args.ckpt);
  const data::Dataset ds = eval_dataset(args.data, ckpt);
  if (ds.dim() != ckpt.bundle.data_dim) {
    throw ShapeError("dataset dimension " + std::to_string(ds.dim()) +
                     " differs from the model's data_dim " + std::to_string(ckpt.bundle.data_dim));
  }
  eval::EvalOptions opts;
  opts.seed = args.seed;
  if (args.samples) opts.generated = *args.samples;
  const eval::EvalReport r = eval::eval_suite(ckpt.bundle, ds, opts);

  const fs::path out = args.out ? *args.out : with_suffix(artifact_stem(args.ckpt), ".eval.csv");
  ensure_parent(out);
  const bool fresh = !fs::exists(out) || fs::file_size(out) == 0;
  std::ofstream f(out, std::ios::binary | std::ios::app);
  if (!f) throw DataError("cannot write " + out.string());
  if (fresh) {
    f << "label,data,seed,reconstruction,latent_cw,frechet_prior,frechet_lcw,modes_covered,"
         "modes_total,min_mode_fraction\n";
  }
  auto opt_count = [](const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : std::string();
  };
  const std::string label = artifact_stem(args.ckpt).filename().string();
  const std::string data_label = args.data.empty() ? ckpt.data.preset : args.data;
  f << label << ',' << data_label << ',' << args.seed << ',' << opt_num(r.reconstruction) << ','
    << opt_num(r.latent_cw) << ',' << opt_num(r.frechet_prior) << ',' << opt_num(r.frechet_lcw)
    << ',' << opt_count(r.modes_covered) << ',' << opt_count(r.modes_total) << ','
    << opt_num(r.min_mode_fraction) << '\n';

  if (r.reconstruction) log << "reconstruction " << num(*r.reconstruction) << "\n";
  if (r.frechet_prior) log << "frechet_prior " << num(*r.frechet_prior) << "\n";
  if (r.frechet_lcw) log << "frechet_lcw " << num(*r.frechet_lcw) << "\n";
  if (r.modes_covered) log << "modes covered " << *r.modes_covered << "/" << *r.modes_total << "\n";
  log << "wrote " << out.string() << "\n";
  return out;
}

double compute_dist(const DistArgs& args) {
  const Tensor a = data::read_points(args.a);
  if (args.gaussian) {
    if (args.metric != "cw") throw ConfigError("--gaussian is only defined for --metric cw");
    if (a.cols() < 2) throw ShapeError("the Cramer-Wold distance needs dimension >= 2");
    cw::CwConfig cfg{a.cols(), cw::SigmaMode::unit, 1e-9};
    return cw::cw2_to_gaussian(ad::constant(a), cfg).item();
  }
  if (!args.b) throw ConfigError("--b is required unless --gaussian is given");
  const Tensor b = data::read_points(*args.b);
  if (a.cols() != b.cols()) {
    throw ShapeError("samples have dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.cols()));
  }
  if (a.rows() != b.rows()) {
    throw ShapeError("samples have " + std::to_string(a.rows()) + " and " +
                     std::to_string(b.rows()) + " points; equal sizes are required");
  }
  if (args.metric == "cw") {
    if (a.cols() < 2) throw ShapeError("the Cramer-Wold distance needs dimension >= 2");
    cw::CwConfig cfg{a.cols(), cw::SigmaMode::pooled, 1e-9};
    return cw::cw2_two_samples(ad::constant(a), ad::constant(b), cfg).item();
  }
  if (args.metric == "sw") {
    if (args.sw_dirs == 0) throw ConfigError("--sw-dirs must be positive");
    return cw::sliced_wasserstein(ad::constant(a), ad::constant(b), args.sw_dirs, args.seed).item();
  }
  throw ConfigError("--metric must be cw or sw, got '" + args.metric + "'");
}

std::string format_dist(double v) {
  if (v == 0.0) return "0.000000000";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace lcw::cli
