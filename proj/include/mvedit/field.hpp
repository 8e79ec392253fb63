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

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvedit/scene.hpp"

namespace mvedit {

/// Dense N^3 grid of pre-activation parameters on the vertices of an
/// axis-aligned box. Density goes through softplus (units 1/world length),
/// colour through a sigmoid. Storage is x-fastest; colour is interleaved
/// rgb per voxel.
struct VoxelField {
  int resolution = 0;
  Eigen::Vector3d bounds_min = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d bounds_max = Eigen::Vector3d::Constant(1.0);
  std::vector<double> density;
  std::vector<double> color;

  static VoxelField uniform(int resolution, const Eigen::Vector3d& bounds_min,
                            const Eigen::Vector3d& bounds_max, double density_raw,
                            double color_raw);

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(resolution) * resolution * resolution;
  }
  std::size_t voxel_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * resolution + y) * resolution + x;
  }
  void validate() const;

  friend bool operator==(const VoxelField&, const VoxelField&) = default;
};

struct RenderConfig {
  int samples_per_ray = 64;
  double near = 1.0;
  double far = 5.0;
  std::array<double, 3> background = {0.0, 0.0, 0.0};

  void validate() const;
};

struct Pixel {
  int row = 0;
  int col = 0;
};

using Rgb = std::array<double, 3>;

struct FieldGradient {
  std::vector<double> density;
  std::vector<double> color;

  static FieldGradient zeros_like(const VoxelField& field);
  void clear();
};

double softplus(double x);
double sigmoid(double x);

std::vector<Pixel> all_pixels(const Camera& cam);
std::vector<Pixel> window_pixels(int row0, int col0, int height, int width);

/// Emission-absorption compositing of M midpoint samples per ray over
/// [near, far] (Euclidean distance from the camera centre).
std::vector<Rgb> render(const VoxelField& field, const Camera& cam, std::span<const Pixel> pixels,
                        const RenderConfig& cfg);

/// Per-ray compositing weights T_i * alpha_i followed by the residual
/// transmittance; they sum to 1.
std::vector<double> compositing_weights(const VoxelField& field, const Camera& cam,
                                        const Pixel& pixel, const RenderConfig& cfg);

Raster render_image(const VoxelField& field, const Camera& cam, const RenderConfig& cfg);

/// Adds d(sum_p <upstream_p, render_p>)/d(params) into grad. Deterministic:
/// rays are processed in fixed blocks and scattered in pixel order.
void render_backward(const VoxelField& field, const Camera& cam, std::span<const Pixel> pixels,
                     const RenderConfig& cfg, std::span<const Rgb> upstream, FieldGradient& grad);

FieldGradient render_backward(const VoxelField& field, const Camera& cam,
                              std::span<const Pixel> pixels, const RenderConfig& cfg,
                              std::span<const Rgb> upstream);

}  // namespace mvedit
