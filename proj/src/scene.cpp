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

#include "mvedit/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include <Eigen/Geometry>

#include "mvedit/errors.hpp"
#include "mvedit/parallel.hpp"

namespace mvedit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHitEpsilon = 1e-9;

std::optional<double> hit_sphere(const Sphere& s, const Eigen::Vector3d& o,
                                 const Eigen::Vector3d& d) {
  const Eigen::Vector3d oc = o - s.center;
  const double a = d.squaredNorm();
  const double b = 2.0 * d.dot(oc);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = -0.5 * (b + std::copysign(root, b));
  double t0 = q / a;
  double t1 = c / q;
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > kHitEpsilon) return t0;
  if (t1 > kHitEpsilon) return t1;
  return std::nullopt;
}

std::optional<double> hit_box(const Box& b, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  double t_near = -kInf;
  double t_far = kInf;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = b.center[axis] - b.half_extent[axis];
    const double hi = b.center[axis] + b.half_extent[axis];
    if (d[axis] == 0.0) {
      if (o[axis] < lo || o[axis] > hi) return std::nullopt;
      continue;
    }
    double t0 = (lo - o[axis]) / d[axis];
    double t1 = (hi - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far) return std::nullopt;
  if (t_near > kHitEpsilon) return t_near;
  if (t_far > kHitEpsilon) return t_far;
  return std::nullopt;
}

bool inside_bounds(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                   const Eigen::Vector3d& pmin, const Eigen::Vector3d& pmax) {
  return (pmin.array() >= lo.array()).all() && (pmax.array() <= hi.array()).all();
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  std::vector<std::vector<int>> views;  // views present in each root's set

  std::size_t add(int view) {
    parent.push_back(parent.size());
    views.push_back({view});
    return parent.size() - 1;
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // Refuses merges that would put two pixels of one view in a set.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return true;
    for (int v : views[b]) {
      if (std::find(views[a].begin(), views[a].end(), v) != views[a].end()) return false;
    }
    if (b < a) std::swap(a, b);
    parent[b] = a;
    views[a].insert(views[a].end(), views[b].begin(), views[b].end());
    views[b].clear();
    return true;
  }
};

}  // namespace

void Camera::validate() const {
  if (!(intrinsics.fx > 0.0 && intrinsics.fy > 0.0)) throw DataError("camera focal lengths must be > 0");
  if (height <= 0 || width <= 0) throw DataError("camera resolution must be positive");
  const Eigen::Matrix3d gram = rotation * rotation.transpose();
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw DataError("camera rotation is not orthonormal");
  }
  if (rotation.determinant() < 0.0) throw DataError("camera rotation has negative determinant");
}

Eigen::Vector3d Camera::center() const { return -rotation.transpose() * translation; }

Eigen::Vector3d Camera::ray_direction(double row, double col) const {
  const Eigen::Vector3d cam_dir((col - intrinsics.cx) / intrinsics.fx,
                                (row - intrinsics.cy) / intrinsics.fy, 1.0);
  return rotation.transpose() * cam_dir;
}

std::optional<Eigen::Vector3d> Camera::project(const Eigen::Vector3d& world) const {
  const Eigen::Vector3d pc = rotation * world + translation;
  if (pc.z() <= kHitEpsilon) return std::nullopt;
  return Eigen::Vector3d(intrinsics.fx * pc.x() / pc.z() + intrinsics.cx,
                         intrinsics.fy * pc.y() / pc.z() + intrinsics.cy, pc.z());
}

Intrinsics intrinsics_from_fov(double fov_degrees, int height, int width) {
  const double f = 0.5 * width / std::tan(0.5 * fov_degrees * M_PI / 180.0);
  return {f, f, 0.5 * (width - 1), 0.5 * (height - 1)};
}

Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
               const Eigen::Vector3d& up, const Intrinsics& intrinsics, int height, int width) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Camera cam;
  cam.intrinsics = intrinsics;
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = forward;
  cam.translation = -cam.rotation * eye;
  cam.height = height;
  cam.width = width;
  cam.validate();
  return cam;
}

std::vector<Camera> ring_cameras(int count, double radius, double elevation, double fov_degrees,
                                 int height, int width, double start_angle_degrees) {
  if (count < 1) throw UsageError("ring_cameras: count must be >= 1");
  std::vector<Camera> cams;
  const Intrinsics k = intrinsics_from_fov(fov_degrees, height, width);
  for (int i = 0; i < count; ++i) {
    const double angle = (start_angle_degrees + 360.0 * i / count) * M_PI / 180.0;
    const Eigen::Vector3d eye(radius * std::cos(angle), radius * std::sin(angle), elevation);
    cams.push_back(look_at(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), k, height,
                           width));
  }
  return cams;
}

void SyntheticScene::validate() const {
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const auto& p = primitives[i];
    if ((p.albedo.array() < 0.0).any() || (p.albedo.array() > 1.0).any()) {
      throw DataError("primitive " + std::to_string(i) + " albedo outside [0, 1]");
    }
    if (!(p.density >= 0.0)) throw DataError("primitive " + std::to_string(i) + " has negative density");
    Eigen::Vector3d lo, hi;
    if (const auto* s = std::get_if<Sphere>(&p.shape)) {
      if (!(s->radius > 0.0)) throw DataError("sphere radius must be > 0");
      lo = s->center.array() - s->radius;
      hi = s->center.array() + s->radius;
    } else {
      const auto& b = std::get<Box>(p.shape);
      if ((b.half_extent.array() <= 0.0).any()) throw DataError("box extents must be > 0");
      lo = b.center - b.half_extent;
      hi = b.center + b.half_extent;
    }
    if (!inside_bounds(bounds_min, bounds_max, lo, hi)) {
      throw DataError("primitive " + std::to_string(i) + " leaves the world bounds");
    }
  }
}

SyntheticScene default_scene() {
  SyntheticScene scene;
  scene.primitives.push_back(
      {Sphere{{0.3, 0.25, 0.05}, 0.35}, {0.9, 0.35, 0.2}, 1.0});
  scene.primitives.push_back(
      {Box{{-0.25, -0.2, -0.05}, {0.28, 0.28, 0.28}}, {0.2, 0.55, 0.85}, 1.0});
  scene.validate();
  return scene;
}

std::optional<std::pair<double, std::size_t>> intersect(const SyntheticScene& scene,
                                                       const Eigen::Vector3d& origin,
                                                       const Eigen::Vector3d& direction) {
  std::optional<std::pair<double, std::size_t>> best;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const auto& p = scene.primitives[i];
    if (p.density <= 0.0) continue;
    const auto t = std::visit(
        [&](const auto& shape) {
          using T = std::decay_t<decltype(shape)>;
          if constexpr (std::is_same_v<T, Sphere>) return hit_sphere(shape, origin, direction);
          else return hit_box(shape, origin, direction);
        },
        p.shape);
    if (t && (!best || *t < best->first)) best = std::make_pair(*t, i);
  }
  return best;
}

GroundTruthView render_ground_truth(const SyntheticScene& scene, const Camera& cam) {
  cam.validate();
  GroundTruthView out{Raster(3, cam.height, cam.width), Raster(1, cam.height, cam.width, kInf)};
  const Eigen::Vector3d origin = cam.center();
  parallel_for(static_cast<std::size_t>(cam.height), [&](std::size_t r) {
    const int row = static_cast<int>(r);
    for (int col = 0; col < cam.width; ++col) {
      const auto hit = intersect(scene, origin, cam.ray_direction(row, col));
      const Eigen::Vector3d color = hit ? scene.primitives[hit->second].albedo : scene.background;
      for (int c = 0; c < 3; ++c) out.image.at(c, row, col) = color[c];
      if (hit) out.depth.at(0, row, col) = hit->first;
    }
  });
  return out;
}

CorrespondenceSet derive_correspondences(const SyntheticScene& scene,
                                         const std::vector<Camera>& cams, double depth_tol,
                                         int stride) {
  if (cams.size() < 2) throw UsageError("correspondences require >= 2 views");
  if (stride < 1) throw UsageError("stride must be >= 1");
  if (!(depth_tol > 0.0)) throw UsageError("depth tolerance must be > 0");
  const int n = static_cast<int>(cams.size());
  const int h = cams.front().height;
  const int w = cams.front().width;
  for (const auto& c : cams) {
    if (c.height != h || c.width != w) throw UsageError("cameras must share one resolution");
  }
  std::vector<Raster> depth;
  for (const auto& c : cams) depth.push_back(render_ground_truth(scene, c).depth);

  auto lift = [&](int view, int row, int col) -> Eigen::Vector3d {
    return cams[view].center() + depth[view].at(0, row, col) * cams[view].ray_direction(row, col);
  };
  // Pixel in `to` matched by a 3D point, subject to the depth test.
  auto match = [&](const Eigen::Vector3d& x, int to) -> std::optional<PixelRef> {
    const auto proj = cams[to].project(x);
    if (!proj) return std::nullopt;
    const int col = static_cast<int>(std::lround((*proj)[0]));
    const int row = static_cast<int>(std::lround((*proj)[1]));
    if (row < 0 || row >= h || col < 0 || col >= w) return std::nullopt;
    const double d = depth[to].at(0, row, col);
    if (!std::isfinite(d) || std::abs(d - (*proj)[2]) > depth_tol) return std::nullopt;
    return PixelRef{to, row, col};
  };

  // Candidate matches are computed per source view in parallel, merged serially.
  std::vector<std::vector<std::pair<PixelRef, PixelRef>>> edges(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t a_index) {
    const int a = static_cast<int>(a_index);
    for (int row = 0; row < h; row += stride) {
      for (int col = 0; col < w; col += stride) {
        if (!std::isfinite(depth[a].at(0, row, col))) continue;
        const Eigen::Vector3d x = lift(a, row, col);
        for (int b = 0; b < n; ++b) {
          if (b == a) continue;
          const auto q = match(x, b);
          if (!q) continue;
          const auto back = match(lift(b, q->row, q->col), a);
          if (!back || back->row != row || back->col != col) continue;
          edges[a_index].push_back({PixelRef{a, row, col}, *q});
        }
      }
    }
  });

  DisjointSets sets;
  std::unordered_map<std::uint64_t, std::size_t> node_of;
  std::vector<PixelRef> pixel_of;
  auto node = [&](const PixelRef& p) {
    const std::uint64_t key = (static_cast<std::uint64_t>(p.view) * h + p.row) * w + p.col;
    auto [it, inserted] = node_of.try_emplace(key, pixel_of.size());
    if (inserted) {
      sets.add(p.view);
      pixel_of.push_back(p);
    }
    return it->second;
  };
  for (const auto& list : edges) {
    for (const auto& [p, q] : list) sets.unite(node(p), node(q));
  }

  std::vector<std::vector<std::size_t>> members(pixel_of.size());
  for (std::size_t i = 0; i < pixel_of.size(); ++i) members[sets.find(i)].push_back(i);

  std::vector<CorrespondenceClass> classes;
  for (std::size_t root = 0; root < members.size(); ++root) {
    if (members[root].size() < 2) continue;
    CorrespondenceClass cls;
    for (std::size_t i : members[root]) cls.push_back(pixel_of[i]);
    std::sort(cls.begin(), cls.end());
    bool closed = true;
    for (const auto& p : cls) {
      const Eigen::Vector3d x = lift(p.view, p.row, p.col);
      for (const auto& q : cls) {
        if (q.view == p.view) continue;
        const auto proj = cams[q.view].project(x);
        if (!proj || std::abs((*proj)[2] - depth[q.view].at(0, q.row, q.col)) > 2.0 * depth_tol) {
          closed = false;
          break;
        }
      }
      if (!closed) break;
    }
    if (closed) classes.push_back(std::move(cls));
  }
  return CorrespondenceSet(n, h, w, std::move(classes));
}

}  // namespace mvedit
