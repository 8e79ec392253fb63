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

#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "mvedit/config.hpp"
#include "mvedit/fit.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {
namespace {

FitConfig small_fit(int steps) {
  FitConfig cfg;
  cfg.steps = steps;
  cfg.rays_per_step = 512;
  cfg.render.samples_per_ray = 64;
  cfg.render.near = 1.5;
  cfg.render.far = 4.5;
  return cfg;
}

VoxelField blank(int n) {
  return VoxelField::uniform(n, Eigen::Vector3d::Constant(-1), Eigen::Vector3d::Constant(1), -2.0,
                             0.0);
}

TEST(Fit, ZeroStepsLeavesFieldUnchanged) {
  const auto cams = ring_cameras(2, 3.0, 1.0, 40.0, 8, 8);
  std::vector<Raster> images(2, Raster(3, 8, 8, 0.5));
  Rng rng = make_stream(0, 0);
  const auto field = blank(8);
  const auto result = fit_field(field, images, cams, small_fit(0), rng);
  EXPECT_EQ(result.field, field);
  EXPECT_TRUE(result.losses.empty());
}

TEST(Fit, UniformBoxHeldOutView) {
  SyntheticScene scene;
  scene.primitives.push_back({Box{{0.0, 0.0, 0.0}, {0.45, 0.45, 0.45}}, {0.8, 0.3, 0.2}, 1.0});
  const auto cams = ring_cameras(8, 3.0, 1.2, 40.0, 32, 32);
  const auto held_out = ring_cameras(1, 3.0, 1.2, 40.0, 32, 32, 22.5)[0];
  std::vector<Raster> images;
  for (const auto& c : cams) images.push_back(render_ground_truth(scene, c).image);
  Rng rng = make_stream(1, 0);
  const auto cfg = small_fit(2000);
  const auto result = fit_field(blank(32), images, cams, cfg, rng);
  const Raster truth = render_ground_truth(scene, held_out).image;
  EXPECT_GE(psnr(render_image(result.field, held_out, cfg.render), truth), 25.0);
}

TEST(Fit, LossWindowsDecreaseOnToyScene) {
  const RunConfig run = load_config(MVEDIT_SOURCE_DIR "/configs/toy.cfg");
  const auto cams = run.cameras();
  std::vector<Raster> images;
  for (const auto& c : cams) images.push_back(quantize8(render_ground_truth(default_scene(), c).image));
  Rng rng = make_stream(run.seed, 0);
  const auto result = fit_field(run.initial_field(), images, cams, run.fit(), rng);
  ASSERT_EQ(result.losses.size(), static_cast<std::size_t>(run.fit_steps));
  double prev = 1e300;
  for (std::size_t start = 0; start + 100 <= result.losses.size(); start += 100) {
    const double mean =
        std::accumulate(result.losses.begin() + start, result.losses.begin() + start + 100, 0.0) / 100;
    EXPECT_LE(mean, prev) << "window starting at step " << start;
    prev = mean;
  }
  EXPECT_GE(mean_psnr(result.field, images, cams, run.render()), 25.0);
}

}  // namespace
}  // namespace mvedit
