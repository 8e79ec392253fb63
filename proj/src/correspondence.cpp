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

#include "mvedit/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>

#include "mvedit/errors.hpp"

namespace mvedit {
namespace {

std::uint64_t key_of(const PixelRef& p, int height, int width) {
  return (static_cast<std::uint64_t>(p.view) * height + p.row) * width + p.col;
}

void check_views(std::span<const Raster> views, const CorrespondenceSet& corr) {
  if (static_cast<int>(views.size()) != corr.n_views()) {
    throw UsageError("view count " + std::to_string(views.size()) +
                     " does not match correspondence set (" + std::to_string(corr.n_views()) +
                     ")");
  }
  for (const auto& v : views) {
    require_same_shape(v, views.front(), "correspondence views");
    if (v.height != corr.height() || v.width != corr.width()) {
      throw UsageError("correspondence bounds do not match raster shape");
    }
  }
}

}  // namespace

CorrespondenceSet::CorrespondenceSet(int n_views, int height, int width,
                                     std::vector<CorrespondenceClass> classes)
    : n_views_(n_views), height_(height), width_(width), classes_(std::move(classes)) {
  if (n_views < 0 || height < 0 || width < 0) {
    throw UsageError("correspondence set dimensions must be non-negative");
  }
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    const auto& cls = classes_[k];
    if (cls.size() < 2) {
      throw DataError("correspondence class " + std::to_string(k) + " has fewer than 2 members");
    }
    for (const auto& p : cls) {
      if (p.view < 0 || p.view >= n_views || p.row < 0 || p.row >= height || p.col < 0 ||
          p.col >= width) {
        throw DataError("correspondence class " + std::to_string(k) + " member " +
                        std::to_string(p.view) + ":" + std::to_string(p.row) + ":" +
                        std::to_string(p.col) + " out of bounds");
      }
      if (!seen.insert(key_of(p, height, width)).second) {
        throw DataError("pixel " + std::to_string(p.view) + ":" + std::to_string(p.row) + ":" +
                        std::to_string(p.col) + " appears in more than one entry");
      }
    }
  }
}

std::size_t CorrespondenceSet::member_count() const {
  std::size_t n = 0;
  for (const auto& c : classes_) n += c.size();
  return n;
}

namespace {

// Offsets from the first member sum to exactly zero on a consistent class, so
// projecting twice is a bitwise no-op.
template <typename Views>
double class_mean(const Views& views, const CorrespondenceClass& cls, int c) {
  const auto& f = cls.front();
  const double first = views[f.view].at(c, f.row, f.col);
  double offset = 0.0;
  for (const auto& p : cls) offset += views[p.view].at(c, p.row, p.col) - first;
  return first + offset / static_cast<double>(cls.size());
}

}  // namespace

double correspondence_distance(std::span<const Raster> views, const CorrespondenceSet& corr) {
  if (corr.empty()) return 0.0;
  check_views(views, corr);
  const int channels = views.front().channels;
  double total = 0.0;
  for (const auto& cls : corr.classes()) {
    const double n = static_cast<double>(cls.size());
    double class_dev = 0.0;
    for (int c = 0; c < channels; ++c) {
      const double mean = class_mean(views, cls, c);
      double dev = 0.0;
      for (const auto& p : cls) dev += std::abs(views[p.view].at(c, p.row, p.col) - mean);
      class_dev += dev / n;
    }
    total += class_dev / channels;
  }
  return total / static_cast<double>(corr.size());
}

void project_consistent_inplace(std::span<Raster> views, const CorrespondenceSet& corr) {
  if (corr.empty()) return;
  check_views(views, corr);
  const int channels = views.front().channels;
  for (const auto& cls : corr.classes()) {
    for (int c = 0; c < channels; ++c) {
      const double mean = class_mean(views, cls, c);
      for (const auto& p : cls) views[p.view].at(c, p.row, p.col) = mean;
    }
  }
}

std::vector<Raster> project_consistent(std::span<const Raster> views,
                                       const CorrespondenceSet& corr) {
  std::vector<Raster> out(views.begin(), views.end());
  project_consistent_inplace(out, corr);
  return out;
}

CorrespondenceSet map_to_latent(const CorrespondenceSet& corr, int factor) {
  if (factor < 1 || corr.height() % factor != 0 || corr.width() % factor != 0) {
    throw UsageError("map_to_latent: factor " + std::to_string(factor) +
                     " must divide raster dimensions " + std::to_string(corr.height()) + "x" +
                     std::to_string(corr.width()));
  }
  if (factor == 1) return corr;
  const int h = corr.height() / factor;
  const int w = corr.width() / factor;
  std::unordered_set<std::uint64_t> owned;
  std::vector<CorrespondenceClass> kept;
  for (const auto& cls : corr.classes()) {
    CorrespondenceClass mapped;
    std::unordered_set<std::uint64_t> local;
    for (const auto& p : cls) {
      const PixelRef q{p.view, p.row / factor, p.col / factor};
      const auto key = key_of(q, h, w);
      if (owned.contains(key) || !local.insert(key).second) continue;
      mapped.push_back(q);
    }
    if (mapped.size() < 2) continue;
    for (const auto& q : mapped) owned.insert(key_of(q, h, w));
    kept.push_back(std::move(mapped));
  }
  return CorrespondenceSet(corr.n_views(), h, w, std::move(kept));
}

CorrespondenceSet restrict_to_views(const CorrespondenceSet& corr, std::span<const int> views) {
  std::vector<int> remap(static_cast<std::size_t>(corr.n_views()), -1);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const int v = views[i];
    if (v < 0 || v >= corr.n_views()) throw UsageError("restrict_to_views: view id out of range");
    if (remap[static_cast<std::size_t>(v)] != -1) {
      throw UsageError("restrict_to_views: duplicate view id");
    }
    remap[static_cast<std::size_t>(v)] = static_cast<int>(i);
  }
  std::vector<CorrespondenceClass> kept;
  for (const auto& cls : corr.classes()) {
    CorrespondenceClass sub;
    for (const auto& p : cls) {
      const int nv = remap[static_cast<std::size_t>(p.view)];
      if (nv >= 0) sub.push_back({nv, p.row, p.col});
    }
    if (sub.size() >= 2) kept.push_back(std::move(sub));
  }
  return CorrespondenceSet(static_cast<int>(views.size()), corr.height(), corr.width(),
                           std::move(kept));
}

void write_correspondences(std::ostream& out, const CorrespondenceSet& corr) {
  for (const auto& cls : corr.classes()) {
    out << cls.size();
    for (const auto& p : cls) out << ' ' << p.view << ':' << p.row << ':' << p.col;
    out << '\n';
  }
}

CorrespondenceSet read_correspondences(std::istream& in, int n_views, int height, int width,
                                       const std::string& source_name) {
  std::vector<CorrespondenceClass> classes;
  std::string line;
  int line_no = 0;
  std::unordered_set<std::uint64_t> seen;
  auto fail = [&](const std::string& why) {
    throw DataError(source_name + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream fields(line);
    long long count = 0;
    if (!(fields >> count) || count < 2) fail("expected member count >= 2");
    CorrespondenceClass cls;
    std::string token;
    while (fields >> token) {
      PixelRef p;
      char c1 = 0, c2 = 0;
      std::istringstream ts(token);
      if (!(ts >> p.view >> c1 >> p.row >> c2 >> p.col) || c1 != ':' || c2 != ':' ||
          ts.peek() != std::char_traits<char>::eof()) {
        fail("malformed entry '" + token + "'");
      }
      if (p.view < 0 || p.view >= n_views || p.row < 0 || p.row >= height || p.col < 0 ||
          p.col >= width) {
        fail("entry '" + token + "' out of bounds");
      }
      if (!seen.insert(key_of(p, height, width)).second) {
        fail("entry '" + token + "' already used");
      }
      cls.push_back(p);
    }
    if (static_cast<long long>(cls.size()) != count) {
      fail("member count " + std::to_string(count) + " but " + std::to_string(cls.size()) +
           " entries");
    }
    classes.push_back(std::move(cls));
  }
  return CorrespondenceSet(n_views, height, width, std::move(classes));
}

void save_correspondences(const std::filesystem::path& path, const CorrespondenceSet& corr) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_correspondences(out, corr);
  if (!out) throw DataError("write failed for " + path.string());
}

CorrespondenceSet load_correspondences(const std::filesystem::path& path, int n_views, int height,
                                       int width) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_correspondences(in, n_views, height, width, path.string());
}

}  // namespace mvedit
