#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "lcw/checkpoint.hpp"
#include "lcw/commands.hpp"
#include "lcw/config.hpp"
#include "lcw/cwdist.hpp"
#include "lcw/datasets.hpp"
#include "lcw/error.hpp"
#include "lcw/eval.hpp"
#include "lcw/training.hpp"

namespace py = pybind11;
using namespace lcw;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return Tensor::matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Tensor& t) {
  Array out({t.rows(), t.cols()});
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

cw::CwConfig cw_config(std::size_t dim, const std::string& sigma) {
  if (sigma != "pooled" && sigma != "unit") throw ConfigError("sigma must be 'pooled' or 'unit'");
  return {dim, sigma == "pooled" ? cw::SigmaMode::pooled : cw::SigmaMode::unit, 1e-9};
}

py::tuple dataset_tuple(const data::Dataset& ds) {
  py::object centers = ds.centers ? py::object(to_array(*ds.centers)) : py::none();
  return py::make_tuple(to_array(ds.points), ds.labels, centers);
}

py::dict report_dict(const eval::EvalReport& r) {
  py::dict d;
  auto put = [&](const char* key, const auto& v) { d[key] = v ? py::cast(*v) : py::none(); };
  put("reconstruction", r.reconstruction);
  put("latent_cw", r.latent_cw);
  put("frechet_prior", r.frechet_prior);
  put("frechet_lcw", r.frechet_lcw);
  put("modes_covered", r.modes_covered);
  put("modes_total", r.modes_total);
  put("min_mode_fraction", r.min_mode_fraction);
  return d;
}

py::list history_list(const std::vector<train::MetricsRecord>& h) {
  py::list out;
  for (const auto& m : h) {
    py::dict d;
    d["epoch"] = m.epoch;
    d["loss"] = m.loss;
    d["rec_term"] = m.rec_term;
    d["latent_term"] = m.latent_term;
    d["frechet"] = m.frechet ? py::cast(*m.frechet) : py::none();
    out.append(d);
  }
  return out;
}

nets::Mlp& require_net(std::optional<nets::Mlp>& net, const char* what) {
  if (!net) throw ModelError(std::string("model has no ") + what);
  return *net;
}

}  // namespace

PYBIND11_MODULE(_lcw, m) {
  m.doc() = "Cramer-Wold distances and two-stage latent generative models";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ModelError>(m, "ModelError", base.ptr());

  m.def(
      "cw2_to_gaussian",
      [](const Array& z) {
        const Tensor t = to_tensor(z);
        return cw::cw2_to_gaussian(ad::constant(t), cw_config(t.cols(), "unit")).item();
      },
      py::arg("z"), "Squared Cramer-Wold distance between a sample and N(0, I).");
  m.def(
      "cw2_two_samples",
      [](const Array& x, const Array& y, const std::string& sigma) {
        const Tensor a = to_tensor(x), b = to_tensor(y);
        return cw::cw2_two_samples(ad::constant(a), ad::constant(b), cw_config(a.cols(), sigma)).item();
      },
      py::arg("x"), py::arg("y"), py::arg("sigma") = "pooled",
      "Squared Cramer-Wold distance between two equally sized samples.");
  m.def(
      "sliced_wasserstein",
      [](const Array& x, const Array& y, std::size_t num_dirs, std::uint64_t seed) {
        return cw::sliced_wasserstein(ad::constant(to_tensor(x)), ad::constant(to_tensor(y)), num_dirs, seed)
            .item();
      },
      py::arg("x"), py::arg("y"), py::arg("num_dirs") = 1000, py::arg("seed") = 0);
  m.def(
      "silverman_gamma", [](std::size_t n, double sigma_hat) { return cw::silverman_gamma(n, sigma_hat).gamma; },
      py::arg("n"), py::arg("sigma_hat") = 1.0);
  m.def(
      "frechet_distance", [](const Array& a, const Array& b) { return eval::frechet_proxy(to_tensor(a), to_tensor(b)); },
      py::arg("a"), py::arg("b"), "Frechet distance between Gaussians fitted to two samples.");

  m.def(
      "gaussian_ring",
      [](std::size_t n, std::size_t modes, double radius, double std_dev, std::uint64_t seed) {
        return dataset_tuple(data::gaussian_ring(modes, radius, std_dev, n, seed));
      },
      py::arg("n"), py::arg("modes") = 8, py::arg("radius") = 5.0, py::arg("std_dev") = 0.2, py::arg("seed") = 0,
      "Returns (points, labels, centers).");
  m.def(
      "two_moons",
      [](std::size_t n, double noise_std, std::uint64_t seed) {
        return dataset_tuple(data::two_moons(n, noise_std, seed));
      },
      py::arg("n"), py::arg("noise_std") = 0.05, py::arg("seed") = 0);
  m.def(
      "checkerboard",
      [](std::size_t n, std::size_t grid, std::uint64_t seed) {
        return dataset_tuple(data::checkerboard(n, grid, seed));
      },
      py::arg("n"), py::arg("grid") = 4, py::arg("seed") = 0);
  m.def(
      "load_idx",
      [](const std::filesystem::path& images, std::optional<std::filesystem::path> labels,
         std::optional<std::size_t> limit) { return dataset_tuple(data::load_idx(images, labels, limit)); },
      py::arg("images"), py::arg("labels") = py::none(), py::arg("limit") = py::none());

  py::class_<cli::Checkpoint>(m, "Model")
      .def_static("load", &cli::load_checkpoint, py::arg("path"))
      .def("save", [](const cli::Checkpoint& c, const std::filesystem::path& p) { cli::save_checkpoint(p, c); },
           py::arg("path"))
      .def_property_readonly("data_dim", [](const cli::Checkpoint& c) { return c.bundle.data_dim; })
      .def_property_readonly("latent_dim", [](const cli::Checkpoint& c) { return c.bundle.latent_dim; })
      .def_property_readonly("noise_dim", [](const cli::Checkpoint& c) { return c.bundle.noise_dim; })
      .def_property_readonly("has_autoencoder", [](const cli::Checkpoint& c) { return c.bundle.has_autoencoder(); })
      .def_property_readonly("has_latent_generator",
                             [](const cli::Checkpoint& c) { return c.bundle.latent_generator.has_value(); })
      .def_property_readonly("metrics",
                             [](const cli::Checkpoint& c) {
                               py::dict d;
                               for (const auto& [stage, h] : c.metrics) d[py::str(stage)] = history_list(h);
                               return d;
                             })
      .def(
          "sample",
          [](cli::Checkpoint& c, std::size_t n, std::uint64_t seed, const std::string& path) {
            return to_array(train::sample(c.bundle, n, seed, train::sample_path_from_string(path)));
          },
          py::arg("n"), py::arg("seed") = 0, py::arg("path") = "prior")
      .def(
          "encode",
          [](cli::Checkpoint& c, const Array& x) {
            return to_array(nets::predict(require_net(c.bundle.encoder, "encoder"), to_tensor(x)));
          },
          py::arg("x"))
      .def(
          "decode",
          [](cli::Checkpoint& c, const Array& z) {
            return to_array(nets::predict(require_net(c.bundle.decoder, "decoder"), to_tensor(z)));
          },
          py::arg("z"))
      .def(
          "evaluate",
          [](cli::Checkpoint& c, std::size_t samples, std::uint64_t seed) {
            const data::Dataset ds = cli::load_dataset(c.data);
            eval::EvalOptions opts;
            opts.generated = samples;
            opts.seed = seed;
            return report_dict(eval::eval_suite(c.bundle, ds, opts));
          },
          py::arg("samples") = 10000, py::arg("seed") = 0,
          "Evaluates on the dataset the model was trained on.");

  m.def(
      "train_stage1",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> out,
         std::optional<std::string> objective) {
        cli::Stage1Args a;
        a.config = config;
        a.out = out;
        a.objective = objective;
        std::ostringstream log;
        return cli::cmd_train_stage1(a, log);
      },
      py::arg("config"), py::arg("out") = py::none(), py::arg("objective") = py::none(),
      py::call_guard<py::gil_scoped_release>(), "Trains the autoencoder; returns the checkpoint path.");
  m.def(
      "train_stage2",
      [](const std::filesystem::path& ckpt, const std::filesystem::path& config,
         std::optional<std::filesystem::path> out) {
        cli::Stage2Args a;
        a.ckpt = ckpt;
        a.config = config;
        a.out = out;
        std::ostringstream log;
        return cli::cmd_train_stage2(a, log);
      },
      py::arg("ckpt"), py::arg("config"), py::arg("out") = py::none(), py::call_guard<py::gil_scoped_release>(),
      "Trains the latent generator on a stage-one checkpoint; returns the new checkpoint path.");
  m.def(
      "train_generator",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> out,
         std::optional<std::string> distance) {
        cli::GeneratorArgs a;
        a.config = config;
        a.out = out;
        a.distance = distance;
        std::ostringstream log;
        return cli::cmd_train_generator(a, log);
      },
      py::arg("config"), py::arg("out") = py::none(), py::arg("distance") = py::none(),
      py::call_guard<py::gil_scoped_release>(), "Trains a direct noise-to-data generator.");
}
