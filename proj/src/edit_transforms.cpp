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

#include "mvedit/edit_transforms.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "mvedit/errors.hpp"

namespace mvedit {
namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Raster mix_channels(const Raster& src, const Mat3& m, bool clamp) {
  if (src.channels != 3) throw UsageError("colour transforms need 3-channel rasters");
  Raster out = src;
  for (int row = 0; row < src.height; ++row) {
    for (int col = 0; col < src.width; ++col) {
      const double in[3] = {src.at(0, row, col), src.at(1, row, col), src.at(2, row, col)};
      for (int c = 0; c < 3; ++c) {
        double v = m[c][0] * in[0] + m[c][1] * in[1] + m[c][2] * in[2];
        out.at(c, row, col) = clamp ? std::clamp(v, 0.0, 1.0) : v;
      }
    }
  }
  return out;
}

Mat3 diagonal(double r, double g, double b) { return {{{r, 0, 0}, {0, g, 0}, {0, 0, b}}}; }

Raster box_blur(const Raster& src) {
  Raster out = src;
  for (int c = 0; c < src.channels; ++c) {
    for (int row = 0; row < src.height; ++row) {
      for (int col = 0; col < src.width; ++col) {
        double sum = 0.0;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = std::clamp(row + dr, 0, src.height - 1);
            const int cc = std::clamp(col + dc, 0, src.width - 1);
            sum += src.at(c, rr, cc);
          }
        }
        out.at(c, row, col) = sum / 9.0;
      }
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& transform_names() {
  static const std::vector<std::string> names = {
      "identity", "grayscale", "swap_rb", "sepia",  "warm",  "cool",
      "darken",   "brighten",  "invert",  "blur",   "flip_h"};
  return names;
}

bool is_known_transform(std::string_view name) {
  const auto& names = transform_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

Raster apply_transform(const Raster& source, std::string_view name) {
  if (name == "identity") return source;
  if (name == "grayscale") {
    const Mat3 m = {{{0.299, 0.587, 0.114}, {0.299, 0.587, 0.114}, {0.299, 0.587, 0.114}}};
    return mix_channels(source, m, false);
  }
  if (name == "swap_rb") return mix_channels(source, {{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}}}, false);
  if (name == "sepia") {
    const Mat3 m = {{{0.393, 0.769, 0.189}, {0.349, 0.686, 0.168}, {0.272, 0.534, 0.131}}};
    return mix_channels(source, m, true);
  }
  if (name == "warm") return mix_channels(source, diagonal(1.0, 0.8, 0.45), false);
  if (name == "cool") return mix_channels(source, diagonal(0.45, 0.8, 1.0), false);
  if (name == "darken") return mix_channels(source, diagonal(0.6, 0.6, 0.6), false);
  if (name == "brighten") return mix_channels(source, diagonal(1.4, 1.4, 1.4), true);
  if (name == "invert") {
    Raster out = source;
    for (double& v : out.data) v = 1.0 - v;
    return out;
  }
  if (name == "blur") return box_blur(source);
  if (name == "flip_h") {
    Raster out = source;
    for (int c = 0; c < source.channels; ++c) {
      for (int row = 0; row < source.height; ++row) {
        for (int col = 0; col < source.width; ++col) {
          out.at(c, row, col) = source.at(c, row, source.width - 1 - col);
        }
      }
    }
    return out;
  }
  throw UsageError("unknown edit transform '" + std::string(name) + "'");
}

}  // namespace mvedit
