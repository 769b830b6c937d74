#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lcw/commands.hpp"
#include "lcw/error.hpp"

namespace {

template <typename T>
std::optional<T> opt_if(const CLI::Option* o, const T& v) {
  return o->count() ? std::optional<T>(v) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace lcw::cli;
  CLI::App app{"lcw: Cramer-Wold autoencoders and latent generators"};
  app.require_subcommand(1);

  Stage1Args s1;
  std::string s1_objective, s1_out;
  auto* c1 = app.add_subcommand("train-stage1", "train an AE, CWAE or CW2 autoencoder");
  c1->add_option("--config", s1.config, "run config file")->required();
  auto* c1_obj = c1->add_option("--objective", s1_objective, "ae | cwae | cw2");
  auto* c1_out = c1->add_option("--out", s1_out, "checkpoint path");
  c1->add_flag("--no-wall-time", s1.no_wall_time, "write 0 for wall_s");

  Stage2Args s2;
  std::string s2_out;
  auto* c2 = app.add_subcommand("train-stage2", "fit a latent generator to a trained autoencoder");
  c2->add_option("--ckpt", s2.ckpt, "stage-one checkpoint")->required();
  c2->add_option("--config", s2.config, "run config file")->required();
  auto* c2_out = c2->add_option("--out", s2_out, "checkpoint path");
  c2->add_flag("--no-wall-time", s2.no_wall_time, "write 0 for wall_s");

  GeneratorArgs g;
  std::string g_distance, g_out;
  std::size_t g_dirs = 0;
  auto* cg = app.add_subcommand("train-generator", "train a direct noise-to-data generator");
  cg->add_option("--config", g.config, "run config file")->required();
  auto* cg_dist = cg->add_option("--distance", g_distance, "cw | sw");
  auto* cg_dirs = cg->add_option("--sw-dirs", g_dirs, "projection count for sw");
  auto* cg_out = cg->add_option("--out", g_out, "checkpoint path");
  cg->add_flag("--no-wall-time", g.no_wall_time, "write 0 for wall_s");

  SampleArgs sa;
  std::string sa_out;
  auto* cs = app.add_subcommand("sample", "draw samples from a checkpoint");
  cs->add_option("--ckpt", sa.ckpt, "checkpoint")->required();
  cs->add_option("--n", sa.n, "sample count");
  cs->add_option("--path", sa.path, "prior | lcw");
  cs->add_option("--seed", sa.seed, "random seed");
  auto* cs_out = cs->add_option("--out", sa_out, "output stem");

  InterpolateArgs ia;
  std::string ia_out;
  auto* ci = app.add_subcommand("interpolate", "interpolate between two noise vectors");
  ci->add_option("--ckpt", ia.ckpt, "checkpoint with a latent generator")->required();
  ci->add_option("--mode", ia.mode, "linear | density");
  ci->add_option("--steps", ia.steps, "path length");
  ci->add_option("--seed", ia.seed, "random seed");
  auto* ci_out = ci->add_option("--out", ia_out, "output stem");

  EvalArgs ea;
  std::string ea_out;
  std::size_t ea_samples = 0;
  auto* ce = app.add_subcommand("eval", "evaluate a checkpoint");
  ce->add_option("--ckpt", ea.ckpt, "checkpoint")->required();
  ce->add_option("--data", ea.data, "preset name, config file or data file");
  ce->add_option("--seed", ea.seed, "random seed");
  auto* ce_samples = ce->add_option("--samples", ea_samples, "generated sample count");
  auto* ce_out = ce->add_option("--out", ea_out, "CSV to append to");

  DistArgs da;
  std::string da_b;
  auto* cd = app.add_subcommand("dist", "distance between two point files");
  cd->add_option("--a", da.a, "first sample")->required();
  auto* cd_b = cd->add_option("--b", da_b, "second sample");
  cd->add_option("--metric", da.metric, "cw | sw");
  cd->add_flag("--gaussian", da.gaussian, "distance of --a to N(0, I)");
  cd->add_option("--sw-dirs", da.sw_dirs, "projection count for sw");
  cd->add_option("--seed", da.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*c1) {
      s1.objective = opt_if(c1_obj, s1_objective);
      s1.out = opt_if<std::filesystem::path>(c1_out, s1_out);
      cmd_train_stage1(s1, std::cerr);
    } else if (*c2) {
      s2.out = opt_if<std::filesystem::path>(c2_out, s2_out);
      cmd_train_stage2(s2, std::cerr);
    } else if (*cg) {
      g.distance = opt_if(cg_dist, g_distance);
      g.sw_dirs = opt_if(cg_dirs, g_dirs);
      g.out = opt_if<std::filesystem::path>(cg_out, g_out);
      cmd_train_generator(g, std::cerr);
    } else if (*cs) {
      sa.out = opt_if<std::filesystem::path>(cs_out, sa_out);
      cmd_sample(sa, std::cerr);
    } else if (*ci) {
      ia.out = opt_if<std::filesystem::path>(ci_out, ia_out);
      cmd_interpolate(ia, std::cerr);
    } else if (*ce) {
      ea.samples = opt_if(ce_samples, ea_samples);
      ea.out = opt_if<std::filesystem::path>(ce_out, ea_out);
      cmd_eval(ea, std::cerr);
    } else if (*cd) {
      da.b = opt_if<std::filesystem::path>(cd_b, da_b);
      std::cout << format_dist(compute_dist(da)) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
