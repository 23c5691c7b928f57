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

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veria/geometry.hpp"
#include "veria/image.hpp"
#include "veria/pointcloud.hpp"
#include "veria/random.hpp"

namespace veria::compose {

using geometry::Box3D;
using pointcloud::PointCloud;
using pointcloud::SensorSpec;

/// A verified instance: RGB cutout placed at (left, top) in its source scene
/// image, its pseudo-LiDAR cloud in the sensor frame and the recovered box.
struct InstanceAsset {
  std::string id;
  std::string category;
  std::string subclass;
  ImageBuffer rgb;
  geometry::PixelMask mask;  // same size as rgb
  int left = 0;
  int top = 0;
  PointCloud cloud;
  Box3D box;
  std::string source_scene;
  double center_range = 0.0;

  void validate() const;
};

struct SceneSample {
  std::string scene_id;
  ImageBuffer image;
  PointCloud cloud;  // sensor frame
  geometry::CameraIntrinsics camera;
  geometry::RigidTransform sensor_to_camera;
  std::vector<Box3D> boxes;
  std::vector<std::string> box_categories;
  SensorSpec sensor;
};

/// Separating-axis test on the rotated XY rectangles plus z-interval overlap.
/// Touching boxes count as overlapping.
bool boxes_overlap(const Box3D& a, const Box3D& b);

using ClassCaps = std::map<std::string, int>;

/// Per-class insertion caps: "nuscenes" (construction vehicle 7, motorcycle 5,
/// bicycle 5) or "lyft" (motorcycle 6, bicycle 6). Throws ConfigError.
ClassCaps default_caps(std::string_view dataset);

/// Greedy acceptance in seeded-shuffle order. Categories without a cap are
/// never selected.
std::vector<InstanceAsset> select_instances(const std::vector<InstanceAsset>& db,
                                            const SceneSample& scene,
                                            const ClassCaps& caps,
                                            RandomStream& stream);

/// Painter's algorithm: far to near by center_range, mask pixels only.
ImageBuffer composite_rgb(const SceneSample& scene,
                          const std::vector<InstanceAsset>& selected);

struct OcclusionResult {
  PointCloud cloud;  // surviving scene points, then inserted points in order
  std::vector<std::size_t> removed;  // ascending scene-point indices
};

/// Removes scene points whose sensor cell holds an inserted point with
/// strictly smaller range.
OcclusionResult remove_occluded(const PointCloud& scene_cloud,
                                const std::vector<const PointCloud*>& inserted,
                                const SensorSpec& sensor);

Box3D recover_box(const PointCloud& cloud);

struct Label {
  std::string category;
  Box3D box;
  std::string instance_id;
  bool synthetic = false;
};

nlohmann::json labels_to_json(const std::vector<Label>& labels);
std::vector<Label> labels_from_json(const nlohmann::json& j);

struct ComposeConfig {
  ClassCaps caps = default_caps("nuscenes");
  int p_n = 5;
  bool cross_scene = false;
};

struct ComposedScene {
  ImageBuffer image;
  PointCloud cloud;
  std::vector<Label> labels;
  std::vector<std::string> inserted_ids;
  std::vector<std::string> dropped_ids;  // fell below p_n points
  std::size_t removed_points = 0;
};

ComposedScene compose_scene(const SceneSample& scene,
                            const std::vector<InstanceAsset>& db,
                            const ComposeConfig& cfg, RandomStream& stream);

}  // namespace veria::compose
