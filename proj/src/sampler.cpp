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

#include "mvedit/sampler.hpp"

#include <string>

#include "mvedit/errors.hpp"
#include "mvedit/parallel.hpp"

namespace mvedit {
namespace {

constexpr std::uint64_t kSharedStreamId = 0xffffffffull;

void validate_config(const RegConfig& cfg, const BetaSchedule& s) {
  if (cfg.t_end < 0 || cfg.t_end > s.steps()) {
    throw UsageError("t_end " + std::to_string(cfg.t_end) + " outside [0, " +
                     std::to_string(s.steps()) + "]");
  }
  if (cfg.latent_factor < 1) throw UsageError("latent_factor must be >= 1");
}

}  // namespace

Rng view_stream(std::uint64_t seed, int view) {
  return make_stream(seed, static_cast<std::uint64_t>(view));
}

Rng shared_init_stream(std::uint64_t seed) { return make_stream(seed, kSharedStreamId); }

Raster sample_view(const EditSpec& cond, int latent_factor, const BetaSchedule& s, Rng& rng) {
  cond.validate();
  const EditSpec latent = to_latent(cond, latent_factor);
  const Raster& shape = latent.source;
  Raster x = normal_raster(rng, shape.channels, shape.height, shape.width);
  for (int t = s.steps(); t >= 1; --t) {
    const Raster eps = predict_noise({x, t, latent}, s);
    const Raster z = normal_raster(rng, shape.channels, shape.height, shape.width);
    x = reverse_step(x, t, eps, s, z);
  }
  return upsample_nearest(x, latent_factor);
}

std::vector<Raster> edit_views(std::span<const Raster> sources, std::span<const EditSpec> conds,
                               const CorrespondenceSet& corr, const RegConfig& cfg,
                               const BetaSchedule& s, std::uint64_t seed,
                               const SamplerObserver& observer) {
  validate_config(cfg, s);
  if (sources.size() != conds.size()) throw UsageError("edit_views: sources and conds differ");
  if (sources.empty()) return {};
  for (std::size_t v = 0; v < sources.size(); ++v) {
    require_same_shape(sources[v], sources.front(), "edit_views sources");
    conds[v].validate();
    require_same_shape(conds[v].source, sources[v], "edit_views conditioning");
  }
  const int factor = cfg.latent_factor;
  const Raster& ref = sources.front();
  if (ref.height % factor != 0 || ref.width % factor != 0) {
    throw UsageError("latent_factor must divide the raster dimensions");
  }

  CorrespondenceSet latent_corr;
  if (cfg.t_end > 0) {
    if (corr.n_views() != static_cast<int>(sources.size()) || corr.height() != ref.height ||
        corr.width() != ref.width) {
      throw UsageError("correspondence set does not match the edited views");
    }
    latent_corr = map_to_latent(corr, factor);
  }

  const std::size_t n = sources.size();
  MultiviewSample sample;
  sample.schedule = &s;
  sample.conds.reserve(n);
  for (const auto& c : conds) sample.conds.push_back(to_latent(c, factor));
  const int ch = ref.channels;
  const int h = ref.height / factor;
  const int w = ref.width / factor;

  std::vector<Rng> streams;
  streams.reserve(n);
  for (std::size_t v = 0; v < n; ++v) streams.push_back(view_stream(seed, static_cast<int>(v)));
  if (cfg.shared_init_noise) {
    Rng shared = shared_init_stream(seed);
    const Raster init = normal_raster(shared, ch, h, w);
    sample.x.assign(n, init);
  } else {
    for (std::size_t v = 0; v < n; ++v) sample.x.push_back(normal_raster(streams[v], ch, h, w));
  }

  const int steps = s.steps();
  for (int k = 1; k <= steps; ++k) {
    const int t = steps - k + 1;
    // Views advance independently; the projection below is the barrier.
    parallel_for(n, [&](std::size_t v) {
      const Raster eps = predict_noise({sample.x[v], t, sample.conds[v]}, s);
      const Raster z = normal_raster(streams[v], ch, h, w);
      sample.x[v] = reverse_step(sample.x[v], t, eps, s, z);
    });
    sample.step_index = k;
    if (observer) observer({SamplerEvent::Kind::kReverseStep, k, sample});
    if (k <= cfg.t_end) {
      project_consistent_inplace(sample.x, latent_corr);
      if (observer) observer({SamplerEvent::Kind::kProjection, k, sample});
    }
  }

  std::vector<Raster> out;
  out.reserve(n);
  for (const auto& x : sample.x) out.push_back(upsample_nearest(x, factor));
  return out;
}

std::vector<ProfileEntry> consistency_profile(std::span<const Raster> sources,
                                              std::span<const EditSpec> conds,
                                              const CorrespondenceSet& corr,
                                              const BetaSchedule& s, std::uint64_t seed,
                                              std::span<const int> t_end_list, RegConfig base) {
  std::vector<ProfileEntry> out;
  out.reserve(t_end_list.size());
  for (int t_end : t_end_list) {
    RegConfig cfg = base;
    cfg.t_end = t_end;
    const auto edited = edit_views(sources, conds, corr, cfg, s, seed);
    double hf = 0.0;
    for (const auto& img : edited) hf += high_frequency_energy(img);
    out.push_back({t_end, correspondence_distance(edited, corr),
                   edited.empty() ? 0.0 : hf / static_cast<double>(edited.size())});
  }
  return out;
}

}  // namespace mvedit
