// Copyright 2026 The mvedit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mvedit/checkpoint.hpp"
#include "mvedit/commands.hpp"
#include "mvedit/config.hpp"
#include "mvedit/correspondence.hpp"
#include "mvedit/diffusion.hpp"
#include "mvedit/edit_transforms.hpp"
#include "mvedit/errors.hpp"
#include "mvedit/field.hpp"
#include "mvedit/parallel.hpp"
#include "mvedit/sampler.hpp"
#include "mvedit/scene.hpp"
#include "mvedit/training.hpp"

namespace py = pybind11;
using namespace mvedit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (C, H, W) float64 arrays; 2-D input is read as a single channel.
Raster to_raster(const Array& a) {
  if (a.ndim() != 3 && a.ndim() != 2) throw UsageError("expected a (C, H, W) or (H, W) array");
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(0)) : 1;
  const int h = static_cast<int>(a.shape(a.ndim() - 2));
  const int w = static_cast<int>(a.shape(a.ndim() - 1));
  Raster r(c, h, w);
  std::copy(a.data(), a.data() + a.size(), r.data.begin());
  return r;
}

Array to_array(const Raster& r) {
  Array a({r.channels, r.height, r.width});
  std::copy(r.data.begin(), r.data.end(), a.mutable_data());
  return a;
}

std::vector<Raster> to_rasters(const std::vector<Array>& in) {
  std::vector<Raster> out;
  out.reserve(in.size());
  for (const auto& a : in) out.push_back(to_raster(a));
  return out;
}

std::vector<Array> to_arrays(const std::vector<Raster>& in) {
  std::vector<Array> out;
  out.reserve(in.size());
  for (const auto& r : in) out.push_back(to_array(r));
  return out;
}

using ClassList = std::vector<std::vector<std::tuple<int, int, int>>>;

CorrespondenceSet make_corr(int n_views, int height, int width, const ClassList& classes) {
  std::vector<CorrespondenceClass> out;
  out.reserve(classes.size());
  for (const auto& cls : classes) {
    CorrespondenceClass c;
    for (const auto& [v, r, col] : cls) c.push_back({v, r, col});
    out.push_back(std::move(c));
  }
  return CorrespondenceSet(n_views, height, width, std::move(out));
}

ClassList class_list(const CorrespondenceSet& corr) {
  ClassList out;
  for (const auto& cls : corr.classes()) {
    auto& c = out.emplace_back();
    for (const auto& p : cls) c.emplace_back(p.view, p.row, p.col);
  }
  return out;
}

std::vector<EditSpec> specs_for(const std::vector<Raster>& sources,
                                const std::vector<std::string>& transforms,
                                const std::vector<double>& weights, double std) {
  const EditRecipe recipe{transforms, weights, std};
  recipe.validate();
  std::vector<EditSpec> specs;
  for (const auto& s : sources) specs.push_back(recipe.spec_for(s));
  return specs;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multiview-consistent diffusion editing of voxel radiance fields";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("set_thread_count", &set_thread_count, py::arg("n"));
  m.def("thread_count", &thread_count);

  py::class_<BetaSchedule>(m, "BetaSchedule")
      .def_static("from_betas", &BetaSchedule::from_betas, py::arg("betas"),
                  py::arg("require_terminal_noise") = true)
      .def_property_readonly("steps", &BetaSchedule::steps)
      .def("beta", &BetaSchedule::beta)
      .def("alpha", &BetaSchedule::alpha)
      .def("alpha_bar", &BetaSchedule::alpha_bar)
      .def("sigma", &BetaSchedule::sigma);
  m.def("make_schedule", &make_schedule, py::arg("steps") = 50, py::arg("beta_start") = 0.02,
        py::arg("beta_end") = 0.30);

  m.def(
      "forward_sample",
      [](const Array& x0, int t, const Array& noise, const BetaSchedule& s) {
        return to_array(forward_sample(to_raster(x0), t, to_raster(noise), s));
      },
      py::arg("x0"), py::arg("t"), py::arg("noise"), py::arg("schedule"));
  m.def(
      "reverse_step",
      [](const Array& x, int t, const Array& eps, const BetaSchedule& s, const Array& z) {
        return to_array(reverse_step(to_raster(x), t, to_raster(eps), s, to_raster(z)));
      },
      py::arg("x_t"), py::arg("t"), py::arg("eps_hat"), py::arg("schedule"), py::arg("z"));
  m.def(
      "gaussian_eps",
      [](const Array& x, int t, const Array& target, double std, const BetaSchedule& s) {
        const Raster y = to_raster(target);
        const EditSpec spec{y, {"identity"}, GaussianEdit{y, std}};
        const Raster xt = to_raster(x);
        return to_array(analytic_gaussian_eps({xt, t, spec}, s));
      },
      py::arg("x_t"), py::arg("t"), py::arg("target"), py::arg("std"), py::arg("schedule"));
  m.def(
      "mixture_responsibilities",
      [](const Array& x, int t, const std::vector<Array>& targets, std::vector<double> weights,
         double std, const BetaSchedule& s) {
        const MixtureEdit edit{to_rasters(targets), std::move(weights), std};
        return mixture_responsibilities(to_raster(x), t, edit, s);
      },
      py::arg("x_t"), py::arg("t"), py::arg("targets"), py::arg("weights"), py::arg("std"),
      py::arg("schedule"));

  m.def(
      "apply_transform",
      [](const Array& img, const std::string& name) { return to_array(apply_transform(to_raster(img), name)); },
      py::arg("image"), py::arg("name"));
  m.def("transform_names", &transform_names);

  py::class_<CorrespondenceSet>(m, "CorrespondenceSet")
      .def(py::init(&make_corr), py::arg("n_views"), py::arg("height"), py::arg("width"),
           py::arg("classes") = ClassList{})
      .def_property_readonly("n_views", &CorrespondenceSet::n_views)
      .def_property_readonly("height", &CorrespondenceSet::height)
      .def_property_readonly("width", &CorrespondenceSet::width)
      .def_property_readonly("classes", &class_list)
      .def("__len__", &CorrespondenceSet::size)
      .def("member_count", &CorrespondenceSet::member_count)
      .def(py::self == py::self)
      .def_static(
          "load",
          [](const std::filesystem::path& p, int v, int h, int w) { return load_correspondences(p, v, h, w); },
          py::arg("path"), py::arg("n_views"), py::arg("height"), py::arg("width"))
      .def("save", [](const CorrespondenceSet& c, const std::filesystem::path& p) { save_correspondences(p, c); });
  m.def(
      "correspondence_distance",
      [](const std::vector<Array>& views, const CorrespondenceSet& corr) {
        return correspondence_distance(to_rasters(views), corr);
      },
      py::arg("views"), py::arg("corr"));
  m.def(
      "project_consistent",
      [](const std::vector<Array>& views, const CorrespondenceSet& corr) {
        return to_arrays(project_consistent(to_rasters(views), corr));
      },
      py::arg("views"), py::arg("corr"));
  m.def("map_to_latent", &map_to_latent, py::arg("corr"), py::arg("factor"));
  m.def(
      "restrict_to_views",
      [](const CorrespondenceSet& corr, const std::vector<int>& views) { return restrict_to_views(corr, views); },
      py::arg("corr"), py::arg("views"));

  m.def(
      "edit_views",
      [](const std::vector<Array>& sources, const std::vector<std::string>& transforms,
         const std::vector<double>& weights, double std, const CorrespondenceSet& corr, int t_end,
         int latent_factor, bool shared_init_noise, const BetaSchedule& s, std::uint64_t seed) {
        const auto src = to_rasters(sources);
        const auto specs = specs_for(src, transforms, weights, std);
        std::vector<Raster> out;
        {
          py::gil_scoped_release release;
          out = edit_views(src, specs, corr, RegConfig{t_end, latent_factor, shared_init_noise}, s, seed);
        }
        return to_arrays(out);
      },
      py::arg("sources"), py::arg("transforms"), py::arg("weights") = std::vector<double>{},
      py::arg("std") = 0.05, py::arg("corr") = CorrespondenceSet{}, py::arg("t_end") = 10,
      py::arg("latent_factor") = 4, py::arg("shared_init_noise") = false,
      py::arg("schedule") = make_schedule(50, 0.02, 0.30), py::arg("seed") = 0);
  m.def(
      "sample_view",
      [](const Array& source, const std::vector<std::string>& transforms,
         const std::vector<double>& weights, double std, int latent_factor, const BetaSchedule& s,
         std::uint64_t seed, int view) {
        const auto specs = specs_for({to_raster(source)}, transforms, weights, std);
        Rng rng = view_stream(seed, view);
        return to_array(sample_view(specs.front(), latent_factor, s, rng));
      },
      py::arg("source"), py::arg("transforms"), py::arg("weights") = std::vector<double>{},
      py::arg("std") = 0.05, py::arg("latent_factor") = 4,
      py::arg("schedule") = make_schedule(50, 0.02, 0.30), py::arg("seed") = 0,
      py::arg("view") = 0);

  py::class_<Camera>(m, "Camera")
      .def_property_readonly("height", [](const Camera& c) { return c.height; })
      .def_property_readonly("width", [](const Camera& c) { return c.width; })
      .def_property_readonly("rotation", [](const Camera& c) { return c.rotation; })
      .def_property_readonly("translation", [](const Camera& c) { return c.translation; })
      .def_property_readonly("focal", [](const Camera& c) { return std::pair(c.intrinsics.fx, c.intrinsics.fy); })
      .def("center", &Camera::center)
      .def("project", &Camera::project, py::arg("point"));
  m.def("ring_cameras", &ring_cameras, py::arg("count"), py::arg("radius") = 3.0,
        py::arg("elevation") = 1.2, py::arg("fov") = 40.0, py::arg("height") = 64,
        py::arg("width") = 64, py::arg("start_angle") = 0.0);
  m.def(
      "render_ground_truth",
      [](const Camera& cam) {
        const auto gt = render_ground_truth(default_scene(), cam);
        return py::make_tuple(to_array(gt.image), to_array(gt.depth));
      },
      py::arg("camera"), "Albedo image and depth of the bundled scene.");
  m.def(
      "derive_correspondences",
      [](const std::vector<Camera>& cams, double tol, int stride) {
        return derive_correspondences(default_scene(), cams, tol, stride);
      },
      py::arg("cameras"), py::arg("depth_tol") = kDefaultDepthTol, py::arg("stride") = kDefaultStride);

  py::class_<VoxelField>(m, "VoxelField")
      .def_static("uniform", &VoxelField::uniform, py::arg("resolution"), py::arg("bounds_min"),
                  py::arg("bounds_max"), py::arg("density_raw"), py::arg("color_raw"))
      .def_readonly("resolution", &VoxelField::resolution)
      .def_readwrite("density", &VoxelField::density)
      .def_readwrite("color", &VoxelField::color)
      .def_static("load", [](const std::filesystem::path& p) { return load_checkpoint(p).field; })
      .def("save", [](const VoxelField& f, const std::filesystem::path& p) { save_checkpoint(p, Checkpoint{f, {}, {}}); });
  py::class_<RenderConfig>(m, "RenderConfig")
      .def(py::init<>())
      .def_readwrite("samples_per_ray", &RenderConfig::samples_per_ray)
      .def_readwrite("near", &RenderConfig::near)
      .def_readwrite("far", &RenderConfig::far)
      .def_readwrite("background", &RenderConfig::background);
  m.def(
      "render_image",
      [](const VoxelField& f, const Camera& cam, const RenderConfig& rc) {
        return to_array(render_image(f, cam, rc));
      },
      py::arg("field"), py::arg("camera"), py::arg("render") = RenderConfig{});

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("load", [](const std::filesystem::path& p) { return load_config(p); })
      .def("get", &get_config_value)
      .def("set", &set_config_value, py::arg("key"), py::arg("value"))
      .def("validate", &RunConfig::validate)
      .def_static("keys", &config_keys)
      .def("__str__", [](const RunConfig& c) {
        std::ostringstream out;
        write_config(out, c);
        return out.str();
      });

  // Command entry points return the log the CLI would print.
  m.def(
      "scene_gen",
      [](const RunConfig& cfg, const std::filesystem::path& out) {
        std::ostringstream log;
        cmd_scene_gen(cfg, out, log);
        return log.str();
      },
      py::arg("config"), py::arg("out"));
  m.def(
      "fit",
      [](const std::filesystem::path& data, const RunConfig& cfg, const std::filesystem::path& out) {
        std::ostringstream log;
        py::gil_scoped_release release;
        cmd_fit(data, cfg, out, log);
        return log.str();
      },
      py::arg("data"), py::arg("config"), py::arg("out"));
  m.def(
      "edit",
      [](const std::filesystem::path& data, const RunConfig& cfg, const std::filesystem::path& out,
         std::optional<std::filesystem::path> ckpt) {
        std::ostringstream log;
        py::gil_scoped_release release;
        cmd_edit(data, ckpt, cfg, out, log);
        return log.str();
      },
      py::arg("data"), py::arg("config"), py::arg("out"), py::arg("ckpt") = py::none());
  m.def(
      "train",
      [](const std::filesystem::path& data, const std::filesystem::path& ckpt, const RunConfig& cfg,
         const std::filesystem::path& out) {
        std::ostringstream log;
        py::gil_scoped_release release;
        cmd_train(data, ckpt, cfg, out, log);
        return log.str();
      },
      py::arg("data"), py::arg("ckpt"), py::arg("config"), py::arg("out"));
  m.def(
      "bench",
      [](const std::filesystem::path& data, const RunConfig& cfg, std::optional<std::filesystem::path> ckpt) {
        std::ostringstream log;
        py::gil_scoped_release release;
        return cmd_bench(data, ckpt, cfg, log).to_json();
      },
      py::arg("data"), py::arg("config"), py::arg("ckpt") = py::none(),
      "Returns the benchmark report as a JSON string.");
}
