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

#include "veria/geometry.hpp"
#include "veria/random.hpp"

namespace veria::placement {

using geometry::Box3D;
using geometry::CameraIntrinsics;
using geometry::PixelMask;
using geometry::RigidTransform;
using CropRect = geometry::PixelRect;

/// Per-axis (length, width, height) bounds in meters.
struct SizePrior {
  std::array<double, 3> min{1.0, 1.0, 1.0};
  std::array<double, 3> max{1.0, 1.0, 1.0};

  void validate() const;
  std::array<double, 3> midpoint() const;
  bool operator==(const SizePrior&) const = default;
};

/// Sensor-frame placement region. With free_z the box center height is drawn
/// from [z_min, z_max] instead of resting on z_ground.
struct PlacementRegion {
  double x_min = 0.0, x_max = 54.0;
  double y_min = -20.0, y_max = 20.0;
  double z_ground = -1.84;
  double yaw_min = -3.14159265358979323846, yaw_max = 3.14159265358979323846;
  bool free_z = false;
  double z_min = -1.84, z_max = 1.0;

  void validate() const;
};

struct VisibilityConfig {
  double min_inside_fraction = 0.8;
  int min_side_px = 32;  // mask area must reach min_side_px^2
};

Box3D sample_box(const SizePrior& prior, const PlacementRegion& region,
                 RandomStream& stream);

bool visibility_gate(const Box3D& box, const CameraIntrinsics& cam,
                     const RigidTransform& sensor_to_camera,
                     const VisibilityConfig& cfg = {});

/// Inpainting crop around a mask: bounding rectangle dilated by
/// margin_frac * (larger side) on every side, grown to a square whose side is
/// a multiple of 64 (at least 64), then shifted and clipped into the image.
CropRect inpaint_crop(const PixelMask& mask, double margin_frac = 0.5);

}  // namespace veria::placement
