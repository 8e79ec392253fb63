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
#include <string>
#include <vector>

#include "mvedit/correspondence.hpp"
#include "mvedit/raster.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {

/// On-disk layout:
///   images/view_%03d.png   8-bit RGB, one per camera
///   cameras.txt            `id fx fy cx cy r00..r22 tx ty tz H W` per line
///   correspondence.txt     optional, see write_correspondences
struct Dataset {
  std::vector<Raster> images;
  std::vector<Camera> cameras;
  std::optional<CorrespondenceSet> correspondences;
};

std::string view_image_name(int view);

void write_cameras(std::ostream& out, const std::vector<Camera>& cams);
std::vector<Camera> read_cameras(std::istream& in, const std::string& source_name = "cameras.txt");

void save_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace mvedit
