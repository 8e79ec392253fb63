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

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mvedit {

/// Dense multi-channel image, channel-major (c, row, col).
struct Raster {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Raster() = default;
  Raster(int c, int h, int w, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t index(int c, int row, int col) const {
    return (static_cast<std::size_t>(c) * height + row) * width + col;
  }
  double& at(int c, int row, int col) { return data[index(c, row, col)]; }
  double at(int c, int row, int col) const { return data[index(c, row, col)]; }

  bool same_shape(const Raster& other) const {
    return channels == other.channels && height == other.height && width == other.width;
  }
  bool empty() const { return data.empty(); }

  friend bool operator==(const Raster&, const Raster&) = default;
};

// Throws UsageError naming `what` when shapes differ.
void require_same_shape(const Raster& a, const Raster& b, std::string_view what);
void require_finite(const Raster& r, std::string_view what);

Raster average_pool(const Raster& r, int factor);
Raster upsample_nearest(const Raster& r, int factor);

Raster crop(const Raster& r, int row0, int col0, int height, int width);

/// Mean squared response of the 4-neighbour 3x3 Laplacian with zero-padded
/// borders, averaged over every channel and pixel.
double high_frequency_energy(const Raster& r);

double mean_squared_error(const Raster& a, const Raster& b);
double psnr(const Raster& a, const Raster& b, double peak = 1.0);

// Rounds to the 8-bit grid used by the PNG writer.
Raster quantize8(const Raster& r);

}  // namespace mvedit
