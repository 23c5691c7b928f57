// Copyright 2026 The Veria Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace veria::geometry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDepthEpsilon = 1e-6;  // meters

/// Wraps an angle into [-pi, pi).
double wrap_angle(double radians);

/// Pinhole intrinsics. Pixel (i, j) has its center at (i + 0.5, j + 0.5).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  int width = 1;
  int height = 1;

  void validate() const;

  /// Intrinsics of the sub-image [left, left + w) x [top, top + h).
  CameraIntrinsics cropped(int left, int top, int w, int h) const;
};

/// Maps points from a source frame into a target frame: p' = R p + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_inverse(const Vec3& p) const {
    return rotation.transpose() * (p - translation);
  }
  RigidTransform inverse() const;
  /// (this * other)(p) == this->apply(other.apply(p))
  RigidTransform operator*(const RigidTransform& other) const;

  void validate() const;

  static RigidTransform rotation_z(double radians);
};

/// 7-DoF box in the sensor frame. Yaw is about +z.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  double yaw = 0.0;

  void validate() const;
  std::array<double, 7> to_array() const;
  static Box3D from_array(const std::array<double, 7>& a);

  bool operator==(const Box3D&) const = default;
};

/// Half-open pixel rectangle [left, right) x [top, bottom).
struct PixelRect {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  int width() const { return right - left; }
  int height() const { return bottom - top; }
  bool empty() const { return right <= left || bottom <= top; }
  bool contains(const PixelRect& o) const {
    return o.left >= left && o.top >= top && o.right <= right &&
           o.bottom <= bottom;
  }
  PixelRect intersect(const PixelRect& o) const;
  bool operator==(const PixelRect&) const = default;
};

class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool value = true) { bits_[index(x, y)] = value; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::int64_t count() const;
  bool empty() const;
  /// Tight bounding rectangle of set pixels; nullopt when empty.
  std::optional<PixelRect> bounds() const;
  /// Sub-mask covering rect (rect must lie inside the mask).
  PixelMask crop(const PixelRect& rect) const;
  /// Set pixels of this mask AND other (same dimensions).
  PixelMask intersect(const PixelMask& other) const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<std::uint8_t>& bits() { return bits_; }

  bool operator==(const PixelMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // camera-frame z
  bool valid = false;
};

/// Corners in fixed order: bottom face counter-clockwise seen from +z
/// starting at (-x, -y), then the top face in the same order.
std::array<Vec3, 8> box_corners(const Box3D& box);

Projection project_point(const Vec3& p_sensor, const CameraIntrinsics& cam,
                         const RigidTransform& sensor_to_camera);

/// valid=false for depth <= kDepthEpsilon or outside [0,w) x [0,h).
std::vector<Projection> project_points(std::span<const Vec3> points,
                                       const CameraIntrinsics& cam,
                                       const RigidTransform& sensor_to_camera);

/// Camera-frame point for pixel coordinate (u, v) at the given depth.
/// Throws InvalidDepth for depth <= 0.
Vec3 backproject(double u, double v, double depth, const CameraIntrinsics& cam);

// Planar polygon helpers. Polygons are counter-clockwise in image coordinates.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);
double polygon_area(std::span<const Vec2> polygon);
/// Sutherland-Hodgman clip of a convex polygon against an axis-aligned box.
std::vector<Vec2> clip_polygon(std::span<const Vec2> polygon, double x0,
                               double y0, double x1, double y1);
/// Pixels whose center lies inside or on the convex polygon, clipped to
/// the mask dimensions.
PixelMask rasterize_convex(std::span<const Vec2> hull, int width, int height);
/// Number of pixels rasterize_convex would set.
std::int64_t rasterized_count(std::span<const Vec2> hull, int width, int height);

/// Image-plane footprint of a box before clipping.
struct Footprint {
  std::vector<Vec2> hull;  // hull of corners in front of the camera
  double hull_area = 0.0;
  double inside_area = 0.0;  // hull area within image bounds
  bool any_corner_valid = false;
};

Footprint box_footprint(const Box3D& box, const CameraIntrinsics& cam,
                        const RigidTransform& sensor_to_camera);

/// Filled convex hull of the projected corners, clipped to the image.
/// Throws NotVisible if no corner projects validly.
PixelMask box_to_mask(const Box3D& box, const CameraIntrinsics& cam,
                      const RigidTransform& sensor_to_camera);

}  // namespace veria::geometry
