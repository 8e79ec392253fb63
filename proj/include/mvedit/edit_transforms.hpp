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

#include <string>
#include <string_view>
#include <vector>

#include "mvedit/raster.hpp"

namespace mvedit {

// Named image transforms used to build edit targets (the prompt analog).
// Colour transforms act per pixel, so they commute with viewpoint changes;
// blur and flip_h alter image structure.
Raster apply_transform(const Raster& source, std::string_view name);

bool is_known_transform(std::string_view name);
const std::vector<std::string>& transform_names();

}  // namespace mvedit
