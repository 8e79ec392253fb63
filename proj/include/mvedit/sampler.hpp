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
#include <functional>
#include <span>
#include <vector>

#include "mvedit/correspondence.hpp"
#include "mvedit/diffusion.hpp"
#include "mvedit/rng.hpp"

namespace mvedit {

struct RegConfig {
  int t_end = 10;  // completed reverse steps (counted from x_T) followed by a projection
  int latent_factor = 4;
  bool shared_init_noise = false;
};

/// State of a multiview reverse chain. step_index counts completed denoising
/// steps, so it is 0 at x_T and T at x_0.
struct MultiviewSample {
  std::vector<Raster> x;
  int step_index = 0;
  std::vector<EditSpec> conds;
  const BetaSchedule* schedule = nullptr;
};

struct SamplerEvent {
  enum class Kind { kReverseStep, kProjection };
  Kind kind;
  int step_index;
  const MultiviewSample& sample;
};

using SamplerObserver = std::function<void(const SamplerEvent&)>;

// Noise stream consumed by view v: x_T first (unless shared), then one z per step.
Rng view_stream(std::uint64_t seed, int view);
Rng shared_init_stream(std::uint64_t seed);

/// Unregularized sampler for a single view; operates in the latent grid and
/// returns the nearest-neighbour decoded x_0.
Raster sample_view(const EditSpec& cond, int latent_factor, const BetaSchedule& s, Rng& rng);

/// Edits a batch of views jointly: per-view reverse diffusion in the latent
/// grid, with a correspondence projection after each of the first t_end steps.
std::vector<Raster> edit_views(std::span<const Raster> sources, std::span<const EditSpec> conds,
                               const CorrespondenceSet& corr, const RegConfig& cfg,
                               const BetaSchedule& s, std::uint64_t seed,
                               const SamplerObserver& observer = {});

struct ProfileEntry {
  int t_end;
  double distance;
  double hf_energy;
};

/// edit_views once per t_end with a fixed seed; reports the final-image
/// correspondence distance and the mean high-frequency energy over views.
std::vector<ProfileEntry> consistency_profile(std::span<const Raster> sources,
                                              std::span<const EditSpec> conds,
                                              const CorrespondenceSet& corr,
                                              const BetaSchedule& s, std::uint64_t seed,
                                              std::span<const int> t_end_list,
                                              RegConfig base = {});

}  // namespace mvedit
