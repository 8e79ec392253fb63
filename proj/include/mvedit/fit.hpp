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

#include <cstdint>
#include <vector>

#include "mvedit/adam.hpp"
#include "mvedit/field.hpp"
#include "mvedit/rng.hpp"

namespace mvedit {

/// One Adam state per parameter array, so density and colour can use
/// different step sizes.
struct FieldOptimizer {
  AdamState density;
  AdamState color;

  static FieldOptimizer for_field(const VoxelField& field, const AdamConfig& density_cfg,
                                  const AdamConfig& color_cfg);
  void step(VoxelField& field, const FieldGradient& grad);

  friend bool operator==(const FieldOptimizer&, const FieldOptimizer&) = default;
};

struct FitConfig {
  RenderConfig render;
  int steps = 2000;
  int rays_per_step = 512;
  AdamConfig density_adam;
  AdamConfig color_adam;
};

struct FitResult {
  VoxelField field;
  FieldOptimizer optimizer;
  double final_loss = 0.0;
  std::vector<double> losses;  // one per step
};

/// Minimises the mean squared photometric error on random pixel batches.
FitResult fit_field(VoxelField field, const std::vector<Raster>& images,
                    const std::vector<Camera>& cameras, const FitConfig& cfg, Rng& rng);

/// Mean PSNR of full renders against the given images.
double mean_psnr(const VoxelField& field, const std::vector<Raster>& images,
                 const std::vector<Camera>& cameras, const RenderConfig& cfg);

}  // namespace mvedit
