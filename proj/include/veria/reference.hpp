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

// Serial reference implementations of the data-parallel kernels. Used by the
// equivalence tests and the benchmark; not part of the production path.

#include <vector>

#include "veria/compose.hpp"
#include "veria/pointcloud.hpp"

namespace veria::reference {

pointcloud::PointCloud backproject_region(const DepthMap& depth,
                                          const geometry::PixelMask& obj_mask,
                                          const geometry::CameraIntrinsics& cam);

pointcloud::PointCloud contour_band_filter(const pointcloud::PointCloud& cloud,
                                           const geometry::PixelMask& obj_mask,
                                           const DepthMap& depth,
                                           const pointcloud::ContourFilterConfig& cfg);

pointcloud::RangeImage to_range_image(const pointcloud::PointCloud& cloud,
                                      const pointcloud::SensorSpec& sensor);

std::vector<geometry::Vec3> estimate_normals(const pointcloud::PointCloud& cloud, int k,
                                             const geometry::Vec3& viewpoint);

compose::OcclusionResult remove_occluded(
    const pointcloud::PointCloud& scene_cloud,
    const std::vector<const pointcloud::PointCloud*>& inserted,
    const pointcloud::SensorSpec& sensor);

}  // namespace veria::reference
