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

#include "mvedit/fit.hpp"

#include <algorithm>

#include "mvedit/errors.hpp"

namespace mvedit {

FieldOptimizer FieldOptimizer::for_field(const VoxelField& field, const AdamConfig& density_cfg,
                                         const AdamConfig& color_cfg) {
  return {AdamState(field.density.size(), density_cfg), AdamState(field.color.size(), color_cfg)};
}

void FieldOptimizer::step(VoxelField& field, const FieldGradient& grad) {
  adam_step(field.density, grad.density, density);
  adam_step(field.color, grad.color, color);
}

FitResult fit_field(VoxelField field, const std::vector<Raster>& images,
                    const std::vector<Camera>& cameras, const FitConfig& cfg, Rng& rng) {
  if (images.size() != cameras.size() || images.empty()) {
    throw UsageError("fit_field needs one image per camera");
  }
  if (cfg.steps < 0 || cfg.rays_per_step < 1) throw UsageError("fit_field: bad step settings");
  for (std::size_t v = 0; v < images.size(); ++v) {
    if (images[v].height != cameras[v].height || images[v].width != cameras[v].width) {
      throw UsageError("fit_field: image and camera sizes differ");
    }
  }
  field.validate();
  FitResult result{field, FieldOptimizer::for_field(field, cfg.density_adam, cfg.color_adam), 0.0,
                   {}};
  FieldGradient grad = FieldGradient::zeros_like(field);
  std::uniform_int_distribution<std::size_t> pick_view(0, images.size() - 1);
  std::vector<std::vector<Pixel>> batch(images.size());

  for (int step = 0; step < cfg.steps; ++step) {
    for (auto& b : batch) b.clear();
    for (int r = 0; r < cfg.rays_per_step; ++r) {
      const std::size_t v = pick_view(rng);
      std::uniform_int_distribution<int> row(0, cameras[v].height - 1);
      std::uniform_int_distribution<int> col(0, cameras[v].width - 1);
      const int rr = row(rng);
      batch[v].push_back({rr, col(rng)});
    }
    grad.clear();
    double loss = 0.0;
    const double norm = 1.0 / (3.0 * cfg.rays_per_step);
    for (std::size_t v = 0; v < batch.size(); ++v) {
      if (batch[v].empty()) continue;
      const auto values = render(result.field, cameras[v], batch[v], cfg.render);
      std::vector<Rgb> upstream(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
          const double d = values[i][c] - images[v].at(c, batch[v][i].row, batch[v][i].col);
          loss += d * d * norm;
          upstream[i][c] = 2.0 * d * norm;
        }
      }
      render_backward(result.field, cameras[v], batch[v], cfg.render, upstream, grad);
    }
    result.optimizer.step(result.field, grad);
    result.losses.push_back(loss);
  }
  result.final_loss = result.losses.empty() ? 0.0 : result.losses.back();
  return result;
}

double mean_psnr(const VoxelField& field, const std::vector<Raster>& images,
                 const std::vector<Camera>& cameras, const RenderConfig& cfg) {
  if (images.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t v = 0; v < images.size(); ++v) {
    total += psnr(render_image(field, cameras[v], cfg), images[v]);
  }
  return total / static_cast<double>(images.size());
}

}  // namespace mvedit
