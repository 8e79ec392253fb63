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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvedit/diffusion.hpp"
#include "mvedit/fit.hpp"
#include "mvedit/sampler.hpp"
#include "mvedit/scene.hpp"
#include "mvedit/training.hpp"

namespace mvedit {

enum class Strategy { kSinglePass, kIterative, kHybrid };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& text);

/// Every tunable of a run. Text form is one `key = value` per line; `#`
/// starts a comment. Lists are comma-separated.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 keeps the process default

  // Synthetic scene and correspondences.
  int views = 8;
  int image_size = 64;
  double ring_radius = 3.0;
  double ring_elevation = 1.2;
  double fov = 40.0;
  double start_angle = 0.0;
  double depth_tol = kDefaultDepthTol;
  int stride = kDefaultStride;

  // Diffusion and sampler.
  int diffusion_steps = 50;
  double beta_start = 0.02;
  double beta_end = 0.30;
  int t_end = 10;
  int latent_factor = 4;
  bool shared_init_noise = false;
  std::vector<std::string> transforms = {"warm"};
  std::vector<double> weights;
  double edit_std = 0.05;
  std::vector<int> edit_t_ends = {0, 10};

  // Radiance field.
  int field_resolution = 64;
  int samples_per_ray = 64;
  double near = 1.0;
  double far = 5.0;
  double field_extent = 1.0;  // grid spans [-extent, extent]^3
  double density_init = -2.0;
  double color_init = 0.0;
  double lr_density = 1e-2;
  double lr_color = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int fit_steps = 2000;
  int fit_rays = 512;

  // Dataset update.
  Strategy strategy = Strategy::kSinglePass;
  int batch_views = 4;
  int rounds = 10;
  int n_su = 200;
  int n_iu = 10;
  int field_steps = 3000;  // iterative budget
  int switch_step = 400;
  int hybrid_steps = 1200;
  int patch_size = 32;
  int patches = 8;
  double lambda = 0.1;
  LossMode loss_mode = LossMode::kCombined;
  LossMode iterative_loss = LossMode::kPhotometric;
  int consistency_every = 50;
  int turntable_frames = 8;

  // Benchmark thresholds on renders of every training view.
  double bench_target_mse = 4e-3;
  double bench_consistency = 0.05;
  int bench_eval_every = 10;

  /// Enforces every module-level invariant that can be checked without data.
  void validate() const;

  BetaSchedule schedule() const;
  RegConfig reg() const;
  EditRecipe recipe() const;
  RenderConfig render() const;
  FitConfig fit() const;
  TrainConfig train() const;
  std::vector<Camera> cameras() const;
  VoxelField initial_field() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Names of all keys, in serialization order.
const std::vector<std::string>& config_keys();

/// Applies one `key = value` assignment; unknown keys and malformed values
/// throw UsageError.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Parses assignments on top of `base`, then validates.
RunConfig parse_config(std::istream& in, const std::string& source_name = "config",
                       RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace mvedit
