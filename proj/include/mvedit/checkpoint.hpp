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

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "mvedit/diffusion.hpp"
#include "mvedit/fit.hpp"

namespace mvedit {

struct Checkpoint {
  VoxelField field;
  std::optional<FieldOptimizer> optimizer;
  std::optional<BetaSchedule> schedule;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian binary: "MVDF", u32 version, u32 resolution, 6 x f64
/// bounds (min xyz, max xyz), f32 density[N^3], f32 colour[N^3 * 3], then
/// optional tagged blocks, each at most once:
///   "ADAM"  for density then colour: u64 step, f64 lr, f64 beta1,
///           f64 beta2, f64 eps, f32 m[n], f32 v[n]
///   "SCHD"  u32 T, f64 beta[T]
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mvedit
