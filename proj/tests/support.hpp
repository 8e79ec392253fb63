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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "mvedit/correspondence.hpp"
#include "mvedit/raster.hpp"
#include "mvedit/rng.hpp"

namespace mvedit::testing {

inline Raster uniform_raster(Rng& rng, int c, int h, int w, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Raster r(c, h, w);
  for (double& v : r.data) v = u(rng);
  return r;
}

// Random valid set: up to `classes` classes of 2..max_size members drawn
// without replacement from all (view, pixel) slots.
inline CorrespondenceSet random_correspondence(Rng& rng, int n_views, int h, int w, int classes,
                                               int max_size) {
  std::vector<PixelRef> slots;
  for (int v = 0; v < n_views; ++v) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) slots.push_back({v, r, c});
    }
  }
  std::shuffle(slots.begin(), slots.end(), rng);
  std::uniform_int_distribution<int> size(2, max_size);
  std::vector<CorrespondenceClass> out;
  std::size_t next = 0;
  for (int k = 0; k < classes; ++k) {
    const std::size_t n = static_cast<std::size_t>(size(rng));
    if (next + n > slots.size()) break;
    out.emplace_back(slots.begin() + static_cast<std::ptrdiff_t>(next),
                     slots.begin() + static_cast<std::ptrdiff_t>(next + n));
    next += n;
  }
  return CorrespondenceSet(n_views, h, w, std::move(out));
}

// |a - b| / max(|a|, |b|), falling back to the absolute difference when both
// are below `floor`.
inline double rel_err(double a, double b, double floor = 1e-9) {
  const double scale = std::max(std::abs(a), std::abs(b));
  const double diff = std::abs(a - b);
  return scale < floor ? diff : diff / scale;
}

// Fresh directory under the system temp dir, removed by the destructor.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mvedit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs a shell command, returning its exit status (or -1 if it did not exit).
inline int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

}  // namespace mvedit::testing
