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

#include "veria/geoverify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "veria/error.hpp"

namespace veria::geoverify {

void GeoVerifyConfig::validate() const {
  if (!(lambda > 0.0 && lambda <= 1.0) || p_n < 1) {
    throw Error(ErrorCode::kConfigError, "lambda must be in (0, 1], p_n >= 1");
  }
}

std::string_view to_string(GeoFailReason r) {
  switch (r) {
    case GeoFailReason::kNone: return "none";
    case GeoFailReason::kTooFewPoints: return "too_few_points";
    case GeoFailReason::kSizeX: return "size_x";
    case GeoFailReason::kSizeY: return "size_y";
    case GeoFailReason::kSizeZ: return "size_z";
  }
  return "none";
}

GeoFailReason parse_geo_fail_reason(std::string_view s) {
  for (auto r : {GeoFailReason::kNone, GeoFailReason::kTooFewPoints,
                 GeoFailReason::kSizeX, GeoFailReason::kSizeY,
                 GeoFailReason::kSizeZ}) {
    if (s == to_string(r)) return r;
  }
  throw Error(ErrorCode::kParseError,
              "unknown geometric fail reason: " + std::string(s));
}

Box3D fit_obb_xy(const PointCloud& cloud) {
  const auto& pts = cloud.points;
  const std::size_t n = pts.size();
  if (n < 3) throw Error(ErrorCode::kDegenerateCloud, "fewer than 3 points");

  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x();
    my += p.y();
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (const auto& p : pts) {
    const double dx = p.x() - mx;
    const double dy = p.y() - my;
    cxx += dx * dx;
    cyy += dy * dy;
    cxy += dx * dy;
  }
  cxx /= static_cast<double>(n);
  cyy /= static_cast<double>(n);
  cxy /= static_cast<double>(n);

  const double half_trace = 0.5 * (cxx + cyy);
  const double gap = std::hypot(0.5 * (cxx - cyy), cxy);  // (l1 - l2) / 2
  const double l1 = half_trace + gap;
  const double l2 = half_trace - gap;
  if (!(l1 > 0.0) || l2 <= 1e-15 * l1) {
    throw Error(ErrorCode::kDegenerateCloud, "collinear XY layout");
  }

  double yaw = 0.0;
  if (2.0 * gap >= 1e-12) {
    yaw = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    if (yaw >= 0.5 * std::numbers::pi) yaw -= std::numbers::pi;
    if (yaw < -0.5 * std::numbers::pi) yaw += std::numbers::pi;
  }

  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double u0 = kInf, u1 = -kInf, v0 = kInf, v1 = -kInf, z0 = kInf, z1 = -kInf;
  for (const auto& p : pts) {
    const double u = c * p.x() + s * p.y();
    const double v = -s * p.x() + c * p.y();
    u0 = std::min(u0, u);
    u1 = std::max(u1, u);
    v0 = std::min(v0, v);
    v1 = std::max(v1, v);
    z0 = std::min(z0, p.z());
    z1 = std::max(z1, p.z());
  }
  const double um = 0.5 * (u0 + u1);
  const double vm = 0.5 * (v0 + v1);
  Box3D box;
  box.center = geometry::Vec3(c * um - s * vm, s * um + c * vm, 0.5 * (z0 + z1));
  box.size = geometry::Vec3(u1 - u0, v1 - v0, z1 - z0);
  box.yaw = yaw;
  return box;
}

std::array<double, 3> canonical_sizes(const std::array<double, 3>& s) {
  return {std::max(s[0], s[1]), std::min(s[0], s[1]), s[2]};
}

GeoFailReason size_rule(const std::array<double, 3>& fitted,
                        const std::array<double, 3>& target, double lambda) {
  const auto f = canonical_sizes(fitted);
  const auto t = canonical_sizes(target);
  constexpr GeoFailReason kAxis[3] = {GeoFailReason::kSizeX,
                                      GeoFailReason::kSizeY,
                                      GeoFailReason::kSizeZ};
  for (int i = 0; i < 3; ++i) {
    if (!((1.0 - lambda) * t[i] <= f[i] && f[i] <= (1.0 + lambda) * t[i])) {
      return kAxis[i];
    }
  }
  return GeoFailReason::kNone;
}

GeoVerdict verify_geometry(const PointCloud& cloud,
                           const std::array<double, 3>& target_sizes,
                           const GeoVerifyConfig& cfg) {
  cfg.validate();
  for (double t : target_sizes) {
    if (!(t > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "target sizes must be positive");
    }
  }
  GeoVerdict v;
  v.point_count = static_cast<long>(cloud.size());
  v.target_sizes = canonical_sizes(target_sizes);

  std::optional<Box3D> box;
  try {
    box = fit_obb_xy(cloud);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateCloud) throw;
  }
  if (box) {
    const auto f = canonical_sizes({box->size.x(), box->size.y(), box->size.z()});
    v.fitted_sizes = f;
    v.size_ratios = std::array<double, 3>{f[0] / (*v.target_sizes)[0],
                                          f[1] / (*v.target_sizes)[1],
                                          f[2] / (*v.target_sizes)[2]};
  }
  if (!box || v.point_count < cfg.p_n) {
    v.fail_reason = GeoFailReason::kTooFewPoints;
  } else {
    v.fail_reason = size_rule(*v.fitted_sizes, *v.target_sizes, cfg.lambda);
  }
  v.passed = v.fail_reason == GeoFailReason::kNone;
  return v;
}

}  // namespace veria::geoverify
