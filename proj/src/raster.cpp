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

#include "mvedit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvedit/errors.hpp"

namespace mvedit {

Raster::Raster(int c, int h, int w, double fill)
    : channels(c), height(h), width(w) {
  if (c < 0 || h < 0 || w < 0) throw UsageError("raster dimensions must be non-negative");
  data.assign(static_cast<std::size_t>(c) * h * w, fill);
}

void require_same_shape(const Raster& a, const Raster& b, std::string_view what) {
  if (!a.same_shape(b)) {
    throw UsageError(std::string(what) + ": shape mismatch (" + std::to_string(a.channels) + "x" +
                     std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                     std::to_string(b.channels) + "x" + std::to_string(b.height) + "x" +
                     std::to_string(b.width) + ")");
  }
}

void require_finite(const Raster& r, std::string_view what) {
  for (double v : r.data) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

Raster average_pool(const Raster& r, int factor) {
  if (factor < 1 || r.height % factor != 0 || r.width % factor != 0) {
    throw UsageError("average_pool: factor must divide raster dimensions");
  }
  if (factor == 1) return r;
  Raster out(r.channels, r.height / factor, r.width / factor);
  const double norm = 1.0 / (factor * factor);
  for (int c = 0; c < r.channels; ++c) {
    for (int row = 0; row < out.height; ++row) {
      for (int col = 0; col < out.width; ++col) {
        double sum = 0.0;
        for (int dr = 0; dr < factor; ++dr) {
          for (int dc = 0; dc < factor; ++dc) {
            sum += r.at(c, row * factor + dr, col * factor + dc);
          }
        }
        out.at(c, row, col) = sum * norm;
      }
    }
  }
  return out;
}

Raster upsample_nearest(const Raster& r, int factor) {
  if (factor < 1) throw UsageError("upsample_nearest: factor must be >= 1");
  if (factor == 1) return r;
  Raster out(r.channels, r.height * factor, r.width * factor);
  for (int c = 0; c < out.channels; ++c) {
    for (int row = 0; row < out.height; ++row) {
      for (int col = 0; col < out.width; ++col) {
        out.at(c, row, col) = r.at(c, row / factor, col / factor);
      }
    }
  }
  return out;
}

Raster crop(const Raster& r, int row0, int col0, int height, int width) {
  if (row0 < 0 || col0 < 0 || height < 0 || width < 0 || row0 + height > r.height ||
      col0 + width > r.width) {
    throw UsageError("crop: window out of bounds");
  }
  Raster out(r.channels, height, width);
  for (int c = 0; c < r.channels; ++c) {
    for (int row = 0; row < height; ++row) {
      for (int col = 0; col < width; ++col) out.at(c, row, col) = r.at(c, row0 + row, col0 + col);
    }
  }
  return out;
}

double high_frequency_energy(const Raster& r) {
  if (r.empty()) return 0.0;
  auto value = [&](int c, int row, int col) {
    if (row < 0 || col < 0 || row >= r.height || col >= r.width) return 0.0;
    return r.at(c, row, col);
  };
  double sum = 0.0;
  for (int c = 0; c < r.channels; ++c) {
    for (int row = 0; row < r.height; ++row) {
      for (int col = 0; col < r.width; ++col) {
        const double lap = value(c, row - 1, col) + value(c, row + 1, col) +
                           value(c, row, col - 1) + value(c, row, col + 1) -
                           4.0 * r.at(c, row, col);
        sum += lap * lap;
      }
    }
  }
  return sum / static_cast<double>(r.size());
}

double mean_squared_error(const Raster& a, const Raster& b) {
  require_same_shape(a, b, "mean_squared_error");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double psnr(const Raster& a, const Raster& b, double peak) {
  const double mse = mean_squared_error(a, b);
  if (mse <= 0.0) return INFINITY;
  return 10.0 * std::log10(peak * peak / mse);
}

Raster quantize8(const Raster& r) {
  Raster out = r;
  for (double& v : out.data) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return out;
}

}  // namespace mvedit
