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
#include <optional>
#include <string_view>

#include "veria/geometry.hpp"
#include "veria/pointcloud.hpp"

namespace veria::geoverify {

using geometry::Box3D;
using pointcloud::PointCloud;

struct GeoVerifyConfig {
  double lambda = 0.5;
  int p_n = 5;

  void validate() const;
};

enum class GeoFailReason { kNone, kTooFewPoints, kSizeX, kSizeY, kSizeZ };

std::string_view to_string(GeoFailReason r);
/// Throws ParseError for unknown names.
GeoFailReason parse_geo_fail_reason(std::string_view s);

struct GeoVerdict {
  bool passed = false;
  // Horizontal extents ordered descending; absent when no box could be fit.
  std::optional<std::array<double, 3>> fitted_sizes;
  std::optional<std::array<double, 3>> target_sizes;
  std::optional<std::array<double, 3>> size_ratios;
  long point_count = 0;
  GeoFailReason fail_reason = GeoFailReason::kTooFewPoints;
};

/// Oriented box from the XY covariance eigenvectors. Yaw lies in
/// [-pi/2, pi/2) and is 0 when the two eigenvalues tie within 1e-12.
/// Throws DegenerateCloud for fewer than 3 points or collinear XY layouts.
Box3D fit_obb_xy(const PointCloud& cloud);

/// Orders the two horizontal extents descending.
std::array<double, 3> canonical_sizes(const std::array<double, 3>& s);

/// First failing axis of (1 - lambda) s_i <= fitted_i <= (1 + lambda) s_i
/// (inclusive) on canonically ordered sizes, or kNone.
GeoFailReason size_rule(const std::array<double, 3>& fitted,
                        const std::array<double, 3>& target, double lambda);

GeoVerdict verify_geometry(const PointCloud& cloud,
                           const std::array<double, 3>& target_sizes,
                           const GeoVerifyConfig& cfg = {});

}  // namespace veria::geoverify
