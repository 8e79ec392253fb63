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

#include "mvedit/raster.hpp"

namespace mvedit {

// 8-bit RGB PNG. Values are clamped to [0, 1] and rounded on write.
void write_png(const std::filesystem::path& path, const Raster& image);
Raster read_png(const std::filesystem::path& path);

}  // namespace mvedit
