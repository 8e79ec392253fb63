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

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mvedit/raster.hpp"

namespace mvedit {

struct PixelRef {
  int view = 0;
  int row = 0;
  int col = 0;
  friend auto operator<=>(const PixelRef&, const PixelRef&) = default;
};

using CorrespondenceClass = std::vector<PixelRef>;

/// Equivalence classes of (view, pixel) coordinates that image the same
/// 3D point. Construction enforces: pixels in bounds, view ids < n_views,
/// every class has >= 2 members, and no (view, pixel) is shared by two
/// entries anywhere in the set.
class CorrespondenceSet {
 public:
  CorrespondenceSet() = default;
  CorrespondenceSet(int n_views, int height, int width,
                    std::vector<CorrespondenceClass> classes = {});

  int n_views() const { return n_views_; }
  int height() const { return height_; }
  int width() const { return width_; }
  const std::vector<CorrespondenceClass>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  bool empty() const { return classes_.empty(); }
  std::size_t member_count() const;

  friend bool operator==(const CorrespondenceSet&, const CorrespondenceSet&) = default;

 private:
  int n_views_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<CorrespondenceClass> classes_;
};

/// Mean over classes of the mean absolute deviation of member values from
/// their class mean, averaged over channels. 0 for an empty set.
double correspondence_distance(std::span<const Raster> views, const CorrespondenceSet& corr);

/// Replaces every class member by the class mean; other pixels untouched.
std::vector<Raster> project_consistent(std::span<const Raster> views,
                                       const CorrespondenceSet& corr);
void project_consistent_inplace(std::span<Raster> views, const CorrespondenceSet& corr);

/// Floor-divides pixel coordinates by factor. Duplicates inside a class
/// collapse; an entry already owned by an earlier kept class is dropped;
/// classes left with fewer than 2 members are removed.
CorrespondenceSet map_to_latent(const CorrespondenceSet& corr, int factor);

/// Keeps members whose view is listed, renumbering view ids to positions in
/// `views`. Classes left with fewer than 2 members are removed.
CorrespondenceSet restrict_to_views(const CorrespondenceSet& corr, std::span<const int> views);

// Text format, one class per line: `k view:row:col view:row:col ...` where k
// is the member count. Blank lines and lines starting with '#' are skipped.
void write_correspondences(std::ostream& out, const CorrespondenceSet& corr);
CorrespondenceSet read_correspondences(std::istream& in, int n_views, int height, int width,
                                       const std::string& source_name = "correspondence");
void save_correspondences(const std::filesystem::path& path, const CorrespondenceSet& corr);
CorrespondenceSet load_correspondences(const std::filesystem::path& path, int n_views,
                                       int height, int width);

}  // namespace mvedit
