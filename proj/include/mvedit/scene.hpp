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

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "mvedit/correspondence.hpp"
#include "mvedit/raster.hpp"

namespace mvedit {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

/// Pinhole camera with a world-to-camera rigid transform. Camera axes follow
/// the x-right, y-down, z-forward convention; pixel (row, col) is centred at
/// image coordinates (u = col, v = row).
struct Camera {
  Intrinsics intrinsics;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int height = 0;
  int width = 0;

  void validate() const;
  Eigen::Vector3d center() const;
  /// World-space ray direction whose camera-space z component is 1, so a ray
  /// parameter equals camera depth.
  Eigen::Vector3d ray_direction(double row, double col) const;
  /// (u, v, z) image coordinates and depth; empty when behind the camera.
  std::optional<Eigen::Vector3d> project(const Eigen::Vector3d& world) const;
};

Intrinsics intrinsics_from_fov(double fov_degrees, int height, int width);
Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
               const Eigen::Vector3d& up, const Intrinsics& intrinsics, int height, int width);

/// Cameras at (radius cos a, radius sin a, elevation) for evenly spaced a,
/// looking at the origin with +z up.
std::vector<Camera> ring_cameras(int count, double radius, double elevation, double fov_degrees,
                                 int height, int width, double start_angle_degrees = 0.0);

struct Sphere {
  Eigen::Vector3d center;
  double radius;
};

struct Box {
  Eigen::Vector3d center;
  Eigen::Vector3d half_extent;
};

struct Primitive {
  std::variant<Sphere, Box> shape;
  Eigen::Vector3d albedo;
  double density = 1.0;  // 0 makes the primitive invisible to rays
};

struct SyntheticScene {
  std::vector<Primitive> primitives;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  Eigen::Vector3d bounds_min = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d bounds_max = Eigen::Vector3d::Constant(1.0);

  void validate() const;
};

/// A sphere resting beside a box, both inside [-1, 1]^3, on black.
SyntheticScene default_scene();

struct GroundTruthView {
  Raster image;  // 3 channels, albedo of the first hit or background
  Raster depth;  // 1 channel, camera depth of the first hit; +inf for misses
};

/// Nearest positive ray parameter over visible primitives, and its index.
std::optional<std::pair<double, std::size_t>> intersect(const SyntheticScene& scene,
                                                       const Eigen::Vector3d& origin,
                                                       const Eigen::Vector3d& direction);

GroundTruthView render_ground_truth(const SyntheticScene& scene, const Camera& cam);

inline constexpr double kDefaultDepthTol = 1e-3;
inline constexpr int kDefaultStride = 2;

/// Ground-truth correspondences by depth reprojection. Stride-grid pixels
/// with finite depth are lifted to 3D and reprojected into every other view;
/// a match needs the depth there to agree within depth_tol, in both
/// directions. Matches merge by union-find without ever placing two pixels
/// of one view in a class; a class survives only if every member, lifted to
/// 3D, reprojects into every other member's view within 2 * depth_tol of
/// that member's depth.
CorrespondenceSet derive_correspondences(const SyntheticScene& scene,
                                         const std::vector<Camera>& cams,
                                         double depth_tol = kDefaultDepthTol,
                                         int stride = kDefaultStride);

}  // namespace mvedit
