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

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veria/analytics.hpp"
#include "veria/compose.hpp"
#include "veria/placement.hpp"
#include "veria/providers.hpp"

namespace veria::dataset_io {

namespace fs = std::filesystem;

struct ManifestBox {
  std::string category;
  geometry::Box3D box;
  bool operator==(const ManifestBox&) const = default;
};

/// Self-describing scene: image and cloud paths are relative to the manifest.
struct SceneManifest {
  std::string scene_id;
  std::string image_path;
  std::string cloud_path;
  geometry::CameraIntrinsics camera;
  geometry::RigidTransform sensor_to_camera;
  std::string sensor_spec_id = "32-beam";
  double ground_height = -1.84;
  std::vector<ManifestBox> boxes;
  fs::path base_dir;  // directory of the manifest file; not serialized

  bool operator==(const SceneManifest& o) const;
};

nlohmann::json to_json(const SceneManifest& m);
SceneManifest manifest_from_json(const nlohmann::json& j);
/// Throws ParseError, MissingAsset (image or cloud absent) or ConfigError
/// (unknown sensor id).
SceneManifest load_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const SceneManifest& m);
/// Every *.json file directly inside dir, sorted by file name.
std::vector<SceneManifest> load_manifests(const fs::path& dir);
compose::SceneSample load_scene(const SceneManifest& m);

struct CategoryConfig {
  placement::SizePrior size_prior;
  int max_per_class = 5;
  int candidates_per_scene = 10;
};

struct IntensityConfig {
  bool constant = false;
  double value = 0.5;
  double r_ref = 10.0;
  int normal_k = 8;
};

struct StubConfig {
  std::string preset = "all-pass";
  double depth_scale_min = 1.0;
  double depth_scale_max = 1.0;
};

struct RunConfig {
  std::map<std::string, CategoryConfig> categories;
  placement::PlacementRegion region;
  placement::VisibilityConfig visibility;
  int max_placement_attempts = 200;
  double lambda = 0.5;
  int p_n = 5;
  std::string sensor = "32-beam";
  std::uint64_t run_seed = 42;
  int band_px = 2;
  double tau_edge = 0.3;
  double crop_margin = 0.5;
  int marker_width = 4;
  IntensityConfig intensity;
  std::string provider_mode = "stub";  // stub | http
  providers::ProviderEndpoint endpoint;
  StubConfig stub;
  int max_in_flight = 16;
  int max_new_tokens = 512;
  bool full_marginals = true;
  bool cross_scene = false;

  /// Throws ConfigError.
  void validate() const;
  compose::ClassCaps caps() const;
  pointcloud::SensorSpec sensor_spec() const;

  /// nuScenes-style defaults: construction vehicle, motorcycle, bicycle.
  static RunConfig defaults();
  /// Lyft-style defaults: motorcycle and bicycle, six per scene.
  static RunConfig lyft_defaults();
};

nlohmann::json to_json(const RunConfig& c);
/// Missing keys take their default values. Throws ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const fs::path& path);

// Content-addressed instance database: <db_root>/<id>/{asset.json, cloud.bin,
// cloud.json, rgb.png, mask.png}. The id is the SHA-256 of the payload.
std::string asset_id(const compose::InstanceAsset& asset);
std::string store_asset(const compose::InstanceAsset& asset, const fs::path& db_root);
compose::InstanceAsset load_asset(const fs::path& db_root, const std::string& id);
std::vector<compose::InstanceAsset> load_assets(const fs::path& db_root);

/// Multi-writer JSON Lines log. The schema header is written once, when the
/// file is empty; every record is one append of a complete line.
class LogWriter {
 public:
  explicit LogWriter(const fs::path& path);
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void append(const analytics::CandidateRecord& rec);
  void append_line(const std::string& line);

 private:
  std::mutex mu_;
  int fd_ = -1;
};

void append_record(const fs::path& log, const analytics::CandidateRecord& rec);

/// candidate_ids present in a log; empty when the file does not exist.
/// A trailing partial line (no newline) is ignored.
std::set<std::string> logged_ids(const fs::path& log);

/// Rewrites the log as header + records sorted by candidate_id, keeping the
/// first record for duplicated ids and dropping a trailing partial line.
void canonicalize_log(const fs::path& log);

/// Procedural scene for demos and tests: textured ground, a few parked
/// boxes, and a ray-cast LiDAR sweep of both.
compose::SceneSample make_demo_scene(const std::string& scene_id,
                                     std::uint64_t seed,
                                     const pointcloud::SensorSpec& sensor);
geometry::CameraIntrinsics demo_camera();
geometry::RigidTransform demo_sensor_to_camera();
/// Writes image, cloud and manifest for the scene into dir; returns the
/// manifest path.
fs::path write_scene(const fs::path& dir, const compose::SceneSample& scene,
                     double ground_height);

}  // namespace veria::dataset_io
