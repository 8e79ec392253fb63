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

#include "mvedit/field.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "mvedit/errors.hpp"
#include "mvedit/parallel.hpp"

namespace mvedit {
namespace {

constexpr std::size_t kBackwardBlock = 256;

struct Trilinear {
  std::array<std::size_t, 8> index;
  std::array<double, 8> weight;
};

std::optional<Trilinear> locate(const VoxelField& f, const Eigen::Vector3d& p) {
  const int n = f.resolution;
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int a = 0; a < 3; ++a) {
    const double g = (p[a] - f.bounds_min[a]) / (f.bounds_max[a] - f.bounds_min[a]) * (n - 1);
    if (!(g >= 0.0 && g <= n - 1)) return std::nullopt;
    const int i0 = std::min(static_cast<int>(g), n - 2);
    base[a] = i0;
    frac[a] = g - i0;
  }
  Trilinear t;
  int k = 0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx, ++k) {
        t.index[k] = f.voxel_index(base[0] + dx, base[1] + dy, base[2] + dz);
        t.weight[k] = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                      (dz ? frac[2] : 1.0 - frac[2]);
      }
    }
  }
  return t;
}

struct SampleState {
  std::optional<Trilinear> tri;
  double density_raw = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;
  double transmittance = 1.0;  // before this sample
  Rgb color_raw{};
  Rgb color{};
};

struct RayTrace {
  std::vector<SampleState> samples;
  double residual = 1.0;  // transmittance past the last sample
  Rgb value{};
};

void trace_ray(const VoxelField& f, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
               const RenderConfig& cfg, RayTrace& out) {
  const int m = cfg.samples_per_ray;
  const double delta = (cfg.far - cfg.near) / m;
  out.samples.assign(static_cast<std::size_t>(m), SampleState{});
  out.value = {0.0, 0.0, 0.0};
  double trans = 1.0;
  for (int i = 0; i < m; ++i) {
    SampleState& s = out.samples[static_cast<std::size_t>(i)];
    s.transmittance = trans;
    s.tri = locate(f, origin + (cfg.near + (i + 0.5) * delta) * dir);
    if (!s.tri) continue;
    for (int k = 0; k < 8; ++k) {
      const std::size_t v = s.tri->index[k];
      const double w = s.tri->weight[k];
      s.density_raw += w * f.density[v];
      for (int c = 0; c < 3; ++c) s.color_raw[c] += w * f.color[3 * v + c];
    }
    s.sigma = softplus(s.density_raw);
    s.alpha = -std::expm1(-s.sigma * delta);
    for (int c = 0; c < 3; ++c) {
      s.color[c] = sigmoid(s.color_raw[c]);
      out.value[c] += trans * s.alpha * s.color[c];
    }
    trans *= std::exp(-s.sigma * delta);
  }
  out.residual = trans;
  for (int c = 0; c < 3; ++c) out.value[c] += trans * cfg.background[c];
}

Eigen::Vector3d pixel_dir(const Camera& cam, const Pixel& p) {
  return cam.ray_direction(p.row, p.col).normalized();
}

void check_pixels(const Camera& cam, std::span<const Pixel> pixels) {
  for (const auto& p : pixels) {
    if (p.row < 0 || p.row >= cam.height || p.col < 0 || p.col >= cam.width) {
      throw UsageError("pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                       ") outside the camera frame");
    }
  }
}

}  // namespace

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

VoxelField VoxelField::uniform(int resolution, const Eigen::Vector3d& bounds_min,
                               const Eigen::Vector3d& bounds_max, double density_raw,
                               double color_raw) {
  VoxelField f;
  f.resolution = resolution;
  f.bounds_min = bounds_min;
  f.bounds_max = bounds_max;
  f.density.assign(f.voxel_count(), density_raw);
  f.color.assign(f.voxel_count() * 3, color_raw);
  f.validate();
  return f;
}

void VoxelField::validate() const {
  if (resolution < 2) throw UsageError("voxel field resolution must be >= 2");
  if (!((bounds_max.array() > bounds_min.array()).all())) {
    throw UsageError("voxel field bounds are empty");
  }
  if (density.size() != voxel_count() || color.size() != 3 * voxel_count()) {
    throw DataError("voxel field parameter arrays have the wrong size");
  }
  for (double v : density) {
    if (!std::isfinite(v)) throw NumericError("voxel field has non-finite density");
  }
  for (double v : color) {
    if (!std::isfinite(v)) throw NumericError("voxel field has non-finite colour");
  }
}

void RenderConfig::validate() const {
  if (samples_per_ray < 2) throw UsageError("samples_per_ray must be >= 2");
  if (!(near < far)) throw UsageError("render near must be < far");
}

FieldGradient FieldGradient::zeros_like(const VoxelField& field) {
  return {std::vector<double>(field.density.size(), 0.0),
          std::vector<double>(field.color.size(), 0.0)};
}

void FieldGradient::clear() {
  std::fill(density.begin(), density.end(), 0.0);
  std::fill(color.begin(), color.end(), 0.0);
}

std::vector<Pixel> all_pixels(const Camera& cam) {
  return window_pixels(0, 0, cam.height, cam.width);
}

std::vector<Pixel> window_pixels(int row0, int col0, int height, int width) {
  std::vector<Pixel> px;
  px.reserve(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) px.push_back({row0 + r, col0 + c});
  }
  return px;
}

std::vector<Rgb> render(const VoxelField& field, const Camera& cam, std::span<const Pixel> pixels,
                        const RenderConfig& cfg) {
  cfg.validate();
  check_pixels(cam, pixels);
  std::vector<Rgb> out(pixels.size());
  const Eigen::Vector3d origin = cam.center();
  parallel_for(pixels.size(), [&](std::size_t i) {
    RayTrace trace;
    trace_ray(field, origin, pixel_dir(cam, pixels[i]), cfg, trace);
    out[i] = trace.value;
  });
  return out;
}

std::vector<double> compositing_weights(const VoxelField& field, const Camera& cam,
                                        const Pixel& pixel, const RenderConfig& cfg) {
  cfg.validate();
  RayTrace trace;
  trace_ray(field, cam.center(), pixel_dir(cam, pixel), cfg, trace);
  std::vector<double> w;
  w.reserve(trace.samples.size() + 1);
  for (const auto& s : trace.samples) w.push_back(s.transmittance * s.alpha);
  w.push_back(trace.residual);
  return w;
}

Raster render_image(const VoxelField& field, const Camera& cam, const RenderConfig& cfg) {
  const auto px = all_pixels(cam);
  const auto values = render(field, cam, px, cfg);
  Raster img(3, cam.height, cam.width);
  for (std::size_t i = 0; i < px.size(); ++i) {
    for (int c = 0; c < 3; ++c) img.at(c, px[i].row, px[i].col) = values[i][c];
  }
  return img;
}

void render_backward(const VoxelField& field, const Camera& cam, std::span<const Pixel> pixels,
                     const RenderConfig& cfg, std::span<const Rgb> upstream, FieldGradient& grad) {
  cfg.validate();
  check_pixels(cam, pixels);
  if (upstream.size() != pixels.size()) throw UsageError("render_backward: upstream size mismatch");
  if (grad.density.size() != field.density.size() || grad.color.size() != field.color.size()) {
    throw UsageError("render_backward: gradient buffer does not match the field");
  }
  const double delta = (cfg.far - cfg.near) / cfg.samples_per_ray;
  const Eigen::Vector3d origin = cam.center();

  struct Contribution {
    Trilinear tri;
    double d_density;
    Rgb d_color;
  };
  std::vector<std::vector<Contribution>> block(kBackwardBlock);

  for (std::size_t start = 0; start < pixels.size(); start += kBackwardBlock) {
    const std::size_t count = std::min(kBackwardBlock, pixels.size() - start);
    parallel_for(count, [&](std::size_t j) {
      auto& contrib = block[j];
      contrib.clear();
      const Rgb& g = upstream[start + j];
      if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0) return;
      RayTrace trace;
      trace_ray(field, origin, pixel_dir(cam, pixels[start + j]), cfg, trace);
      // Suffix radiance behind sample i: sum_{k>i} T_k a_k c_k + T_M * bg.
      Rgb behind;
      for (int c = 0; c < 3; ++c) behind[c] = trace.residual * cfg.background[c];
      for (std::size_t i = trace.samples.size(); i-- > 0;) {
        const SampleState& s = trace.samples[i];
        if (!s.tri) continue;
        const double t_next = s.transmittance * (1.0 - s.alpha);
        const double w = s.transmittance * s.alpha;
        double d_sigma = 0.0;
        Contribution out{*s.tri, 0.0, {}};
        for (int c = 0; c < 3; ++c) {
          d_sigma += g[c] * (t_next * s.color[c] - behind[c]);
          out.d_color[c] = g[c] * w * s.color[c] * (1.0 - s.color[c]);
          behind[c] += w * s.color[c];
        }
        out.d_density = delta * d_sigma * sigmoid(s.density_raw);
        contrib.push_back(out);
      }
    });
    for (std::size_t j = 0; j < count; ++j) {
      for (const auto& c : block[j]) {
        for (int k = 0; k < 8; ++k) {
          const std::size_t v = c.tri.index[k];
          const double w = c.tri.weight[k];
          grad.density[v] += w * c.d_density;
          grad.color[3 * v + 0] += w * c.d_color[0];
          grad.color[3 * v + 1] += w * c.d_color[1];
          grad.color[3 * v + 2] += w * c.d_color[2];
        }
      }
    }
  }
}

FieldGradient render_backward(const VoxelField& field, const Camera& cam,
                              std::span<const Pixel> pixels, const RenderConfig& cfg,
                              std::span<const Rgb> upstream) {
  FieldGradient grad = FieldGradient::zeros_like(field);
  render_backward(field, cam, pixels, cfg, upstream, grad);
  return grad;
}

}  // namespace mvedit
