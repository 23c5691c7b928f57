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

#include "veria/placement.hpp"

#include <algorithm>
#include <cmath>

#include "veria/error.hpp"

namespace veria::placement {

void SizePrior::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(min[i] > 0.0) || !(min[i] <= max[i]) || !std::isfinite(max[i])) {
      throw Error(ErrorCode::kInvalidArgument, "invalid size prior");
    }
  }
}

std::array<double, 3> SizePrior::midpoint() const {
  return {0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1]),
          0.5 * (min[2] + max[2])};
}

void PlacementRegion::validate() const {
  if (!(x_min <= x_max) || !(y_min <= y_max) || !(yaw_min <= yaw_max) ||
      (free_z && !(z_min <= z_max)) || !std::isfinite(z_ground)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid placement region");
  }
}

Box3D sample_box(const SizePrior& prior, const PlacementRegion& region,
                 RandomStream& stream) {
  // Draw order is part of the determinism contract.
  Box3D box;
  const double cx = stream.uniform(region.x_min, region.x_max);
  const double cy = stream.uniform(region.y_min, region.y_max);
  const double yaw = stream.uniform(region.yaw_min, region.yaw_max);
  for (int i = 0; i < 3; ++i) {
    box.size[i] = stream.uniform(prior.min[i], prior.max[i]);
  }
  const double cz = region.free_z ? stream.uniform(region.z_min, region.z_max)
                                  : region.z_ground + 0.5 * box.size.z();
  box.center = geometry::Vec3(cx, cy, cz);
  box.yaw = geometry::wrap_angle(yaw);
  return box;
}

bool visibility_gate(const Box3D& box, const CameraIntrinsics& cam,
                     const RigidTransform& sensor_to_camera,
                     const VisibilityConfig& cfg) {
  const auto fp = geometry::box_footprint(box, cam, sensor_to_camera);
  if (!fp.any_corner_valid || !(fp.hull_area > 0.0)) return false;
  if (fp.inside_area < cfg.min_inside_fraction * fp.hull_area) return false;
  return geometry::rasterized_count(fp.hull, cam.width, cam.height) >=
         static_cast<std::int64_t>(cfg.min_side_px) * cfg.min_side_px;
}

namespace {

// Places a window of length `size` centered on [lo, hi) inside [0, extent).
std::pair<int, int> fit_window(int lo, int hi, int size, int extent) {
  if (size >= extent) return {0, extent};
  // floor((lo + hi - size) / 2) without overflow on negatives
  int start = static_cast<int>(std::floor((lo + hi - size) / 2.0));
  start = std::clamp(start, 0, extent - size);
  return {start, start + size};
}

}  // namespace

CropRect inpaint_crop(const PixelMask& mask, double margin_frac) {
  const auto b = mask.bounds();
  if (!b) throw Error(ErrorCode::kInvalidArgument, "empty mask");
  const int larger = std::max(b->width(), b->height());
  const int margin = static_cast<int>(std::ceil(margin_frac * larger));
  const int dilated = larger + 2 * margin;
  const int side = std::max(64, (dilated + 63) / 64 * 64);
  const auto [l, r] = fit_window(b->left, b->right, side, mask.width());
  const auto [t, bt] = fit_window(b->top, b->bottom, side, mask.height());
  return CropRect{l, t, r, bt};
}

}  // namespace veria::placement
