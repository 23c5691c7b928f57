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

#include "veria/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "veria/error.hpp"

namespace veria::geometry {

double wrap_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(radians + std::numbers::pi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= std::numbers::pi;
  // fmod can round up to exactly +pi.
  if (r >= std::numbers::pi) r -= kTwoPi;
  return r;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0) || width < 1 || height < 1 || !(cx >= 0.0) ||
      !(cx < width) || !(cy >= 0.0) || !(cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid camera intrinsics");
  }
}

CameraIntrinsics CameraIntrinsics::cropped(int left, int top, int w,
                                           int h) const {
  CameraIntrinsics out = *this;
  out.cx = cx - left;
  out.cy = cy - top;
  out.width = w;
  out.height = h;
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

void RigidTransform::validate() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (!(ortho <= 1e-9) || !(std::abs(rotation.determinant() - 1.0) <= 1e-9) ||
      !translation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument,
                "rotation is not a proper orthonormal matrix");
  }
}

RigidTransform RigidTransform::rotation_z(double radians) {
  RigidTransform out;
  out.rotation = Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix();
  return out;
}

void Box3D::validate() const {
  if (!(size.x() > 0.0 && size.y() > 0.0 && size.z() > 0.0) ||
      !center.allFinite() || !(yaw >= -std::numbers::pi) ||
      !(yaw < std::numbers::pi)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid Box3D");
  }
}

std::array<double, 7> Box3D::to_array() const {
  return {center.x(), center.y(), center.z(), size.x(),
          size.y(),   size.z(),   yaw};
}

Box3D Box3D::from_array(const std::array<double, 7>& a) {
  Box3D b;
  b.center = Vec3(a[0], a[1], a[2]);
  b.size = Vec3(a[3], a[4], a[5]);
  b.yaw = a[6];
  return b;
}

PixelRect PixelRect::intersect(const PixelRect& o) const {
  PixelRect r{std::max(left, o.left), std::max(top, o.top),
              std::min(right, o.right), std::min(bottom, o.bottom)};
  if (r.empty()) return PixelRect{};
  return r;
}

PixelMask::PixelMask(int width, int height)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) *
                static_cast<std::size_t>(std::max(height, 0)),
            0) {}

std::int64_t PixelMask::count() const {
  std::int64_t n = 0;
  for (const std::uint8_t b : bits_) n += b;
  return n;
}

bool PixelMask::empty() const {
  return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) == bits_.end();
}

std::optional<PixelRect> PixelMask::bounds() const {
  int l = width_, t = height_, r = -1, b = -1;
  for (int y = 0; y < height_; ++y) {
    const auto row = bits_.begin() + static_cast<std::ptrdiff_t>(index(0, y));
    const auto first = std::find(row, row + width_, std::uint8_t{1});
    if (first == row + width_) continue;
    const auto last = std::find(std::make_reverse_iterator(row + width_),
                                std::make_reverse_iterator(row), std::uint8_t{1});
    l = std::min(l, static_cast<int>(first - row));
    r = std::max(r, static_cast<int>(last.base() - row) - 1);
    if (t > y) t = y;
    b = y;
  }
  if (r < 0) return std::nullopt;
  return PixelRect{l, t, r + 1, b + 1};
}

PixelMask PixelMask::crop(const PixelRect& rect) const {
  PixelMask out(rect.width(), rect.height());
  for (int y = 0; y < rect.height(); ++y) {
    const auto src = bits_.begin() +
                     static_cast<std::ptrdiff_t>(index(rect.left, rect.top + y));
    std::copy(src, src + rect.width(),
              out.bits_.begin() + static_cast<std::ptrdiff_t>(out.index(0, y)));
  }
  return out;
}

PixelMask PixelMask::intersect(const PixelMask& other) const {
  if (other.width_ != width_ || other.height_ != height_) {
    throw Error(ErrorCode::kInvalidArgument, "mask dimensions differ");
  }
  PixelMask out(width_, height_);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    out.bits_[i] = bits_[i] & other.bits_[i];
  }
  return out;
}

std::array<Vec3, 8> box_corners(const Box3D& box) {
  static constexpr std::array<std::array<double, 2>, 4> kFace = {
      {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}};
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 half = 0.5 * box.size;
  std::array<Vec3, 8> out;
  for (int level = 0; level < 2; ++level) {
    const double dz = level == 0 ? -half.z() : half.z();
    for (int k = 0; k < 4; ++k) {
      const double dx = kFace[k][0] * half.x();
      const double dy = kFace[k][1] * half.y();
      out[level * 4 + k] = box.center + Vec3(c * dx - s * dy, s * dx + c * dy, dz);
    }
  }
  return out;
}

Projection project_point(const Vec3& p_sensor, const CameraIntrinsics& cam,
                         const RigidTransform& sensor_to_camera) {
  const Vec3 p = sensor_to_camera.apply(p_sensor);
  Projection out;
  out.depth = p.z();
  if (!(p.z() > kDepthEpsilon)) return out;
  out.u = cam.fx * p.x() / p.z() + cam.cx;
  out.v = cam.fy * p.y() / p.z() + cam.cy;
  out.valid = out.u >= 0.0 && out.u < cam.width && out.v >= 0.0 &&
              out.v < cam.height;
  return out;
}

std::vector<Projection> project_points(std::span<const Vec3> points,
                                       const CameraIntrinsics& cam,
                                       const RigidTransform& sensor_to_camera) {
  std::vector<Projection> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = project_point(points[i], cam, sensor_to_camera);
  }
  return out;
}

Vec3 backproject(double u, double v, double depth,
                 const CameraIntrinsics& cam) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw Error(ErrorCode::kInvalidDepth, "depth must be positive and finite");
  }
  return Vec3((u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth,
              depth);
}

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

}  // namespace

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  // Andrew's monotone chain.
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(twice);
}

std::vector<Vec2> clip_polygon(std::span<const Vec2> polygon, double x0,
                               double y0, double x1, double y1) {
  std::vector<Vec2> current(polygon.begin(), polygon.end());
  // Each edge: inside(p) and intersection with the boundary line.
  auto clip_edge = [&](auto inside, auto intersect) {
    if (current.empty()) return;
    std::vector<Vec2> next;
    next.reserve(current.size() + 2);
    for (std::size_t i = 0; i < current.size(); ++i) {
      const Vec2& a = current[i];
      const Vec2& b = current[(i + 1) % current.size()];
      const bool ia = inside(a);
      const bool ib = inside(b);
      if (ia) next.push_back(a);
      if (ia != ib) next.push_back(intersect(a, b));
    }
    current = std::move(next);
  };
  auto at_x = [](double x) {
    return [x](const Vec2& a, const Vec2& b) {
      const double t = (x - a.x()) / (b.x() - a.x());
      return Vec2(x, a.y() + t * (b.y() - a.y()));
    };
  };
  auto at_y = [](double y) {
    return [y](const Vec2& a, const Vec2& b) {
      const double t = (y - a.y()) / (b.y() - a.y());
      return Vec2(a.x() + t * (b.x() - a.x()), y);
    };
  };
  clip_edge([&](const Vec2& p) { return p.x() >= x0; }, at_x(x0));
  clip_edge([&](const Vec2& p) { return p.x() <= x1; }, at_x(x1));
  clip_edge([&](const Vec2& p) { return p.y() >= y0; }, at_y(y0));
  clip_edge([&](const Vec2& p) { return p.y() <= y1; }, at_y(y1));
  return current;
}

namespace {

// Calls fn(row, c0, c1) for every image row with covered columns [c0, c1].
template <typename Fn>
void for_each_span(std::span<const Vec2> hull, int width, int height, Fn&& fn) {
  const std::size_t n = hull.size();
  if (n < 3 || polygon_area(hull) <= 0.0) return;
  double ymin = hull[0].y(), ymax = hull[0].y();
  for (const auto& p : hull) {
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const int row0 = std::max(0, static_cast<int>(std::ceil(ymin - 0.5)));
  const int row1 = std::min(height - 1, static_cast<int>(std::floor(ymax - 0.5)));
  for (int row = row0; row <= row1; ++row) {
    const double y = row + 0.5;
    double xl = std::numeric_limits<double>::infinity();
    double xr = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = hull[i];
      const Vec2& b = hull[(i + 1) % n];
      const double lo = std::min(a.y(), b.y());
      const double hi = std::max(a.y(), b.y());
      if (y < lo || y > hi) continue;
      if (a.y() == b.y()) {
        xl = std::min({xl, a.x(), b.x()});
        xr = std::max({xr, a.x(), b.x()});
        continue;
      }
      const double x = a.x() + (y - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      xl = std::min(xl, x);
      xr = std::max(xr, x);
    }
    if (!(xl <= xr)) continue;
    const double first = std::ceil(xl - 0.5);
    const double last = std::floor(xr - 0.5);
    const int c0 = static_cast<int>(std::max(0.0, first));
    const int c1 = static_cast<int>(std::min<double>(width - 1, last));
    if (c0 <= c1) fn(row, c0, c1);
  }
}

}  // namespace

PixelMask rasterize_convex(std::span<const Vec2> hull, int width, int height) {
  PixelMask mask(width, height);
  auto& bits = mask.bits();
  for_each_span(hull, width, height, [&](int row, int c0, int c1) {
    const auto start = bits.begin() + static_cast<std::ptrdiff_t>(row) * width;
    std::fill(start + c0, start + c1 + 1, std::uint8_t{1});
  });
  return mask;
}

std::int64_t rasterized_count(std::span<const Vec2> hull, int width, int height) {
  std::int64_t n = 0;
  for_each_span(hull, width, height,
                [&](int, int c0, int c1) { n += c1 - c0 + 1; });
  return n;
}

Footprint box_footprint(const Box3D& box, const CameraIntrinsics& cam,
                        const RigidTransform& sensor_to_camera) {
  const auto corners = box_corners(box);
  const auto proj = project_points(corners, cam, sensor_to_camera);
  Footprint fp;
  std::vector<Vec2> front;
  for (const auto& p : proj) {
    if (p.depth > kDepthEpsilon) front.emplace_back(p.u, p.v);
    fp.any_corner_valid = fp.any_corner_valid || p.valid;
  }
  fp.hull = convex_hull(std::move(front));
  fp.hull_area = polygon_area(fp.hull);
  fp.inside_area = polygon_area(
      clip_polygon(fp.hull, 0.0, 0.0, cam.width, cam.height));
  return fp;
}

PixelMask box_to_mask(const Box3D& box, const CameraIntrinsics& cam,
                      const RigidTransform& sensor_to_camera) {
  const Footprint fp = box_footprint(box, cam, sensor_to_camera);
  if (!fp.any_corner_valid) {
    throw Error(ErrorCode::kNotVisible, "no box corner projects into the image");
  }
  PixelMask mask = rasterize_convex(fp.hull, cam.width, cam.height);
  if (mask.empty()) {
    throw Error(ErrorCode::kNotVisible, "projected box covers no pixel center");
  }
  return mask;
}

}  // namespace veria::geometry
