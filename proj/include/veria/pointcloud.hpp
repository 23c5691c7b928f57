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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veria/geometry.hpp"
#include "veria/image.hpp"

namespace veria::pointcloud {

using geometry::Vec3;

struct PixelCoord {
  int x = 0;
  int y = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Metric points with optional per-point intensity in [0, 1] and optional
/// source-pixel provenance (kept by backproject_region and the filters that
/// follow it).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> intensity;      // empty or one per point
  std::vector<PixelCoord> source_px;  // empty or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_intensity() const { return !intensity.empty(); }

  void validate() const;
  /// Applies a rigid transform to every point; attributes are kept.
  PointCloud transformed(const geometry::RigidTransform& t) const;
  /// Points selected by keep[i] != 0, with matching attributes.
  PointCloud select(std::span<const std::uint8_t> keep) const;
  void append(const PointCloud& other);
};

/// Target LiDAR geometry. Rows are beams in increasing elevation.
struct SensorSpec {
  std::string id = "custom";
  std::vector<double> elevations;  // radians, strictly increasing
  double azimuth_resolution = 0.0;  // radians per column
  double fov_min = -3.14159265358979323846;
  double fov_max = 3.14159265358979323846;
  double r_min = 0.5;
  double r_max = 100.0;
  bool constant_intensity = false;
  double constant_value = 0.0;

  int rows() const { return static_cast<int>(elevations.size()); }
  int cols() const;
  void validate() const;
  /// Azimuth of the column center, kept inside [fov_min, fov_max).
  double column_azimuth(int col) const;

  static SensorSpec uniform(std::string id, int beams, double elev_min_deg,
                            double elev_max_deg, double az_res_deg,
                            double r_min, double r_max);
  static SensorSpec beam32();
  static SensorSpec beam64();
  /// "32-beam" or "64-beam"; nullopt otherwise.
  static std::optional<SensorSpec> preset(std::string_view id);
};

/// Sensor-grid cell of a point, or nullopt when outside the angular field of
/// view, the beam acceptance bands, or [r_min, r_max].
struct SensorCell {
  int row = 0;
  int col = 0;
  double range = 0.0;
};
std::optional<SensorCell> sensor_cell(const Vec3& p, const SensorSpec& sensor);

struct RangeImage {
  int rows = 0;
  int cols = 0;
  std::vector<float> range;
  std::vector<float> intensity;  // empty or rows * cols
  std::vector<std::uint8_t> valid;

  RangeImage() = default;
  RangeImage(int rows, int cols, bool with_intensity);

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * cols + col;
  }
  std::size_t valid_count() const;
  bool operator==(const RangeImage&) const = default;
};

/// One camera-frame point per valid masked pixel, at the pixel center.
/// Throws EmptyCloud when no masked pixel has valid depth.
PointCloud backproject_region(const DepthMap& depth,
                              const geometry::PixelMask& obj_mask,
                              const geometry::CameraIntrinsics& cam);

struct ContourFilterConfig {
  int band_px = 2;
  double tau_edge = 0.3;  // meters
  int median_window = 5;
};

/// Drops points whose source pixel is within band_px (Chebyshev) of the mask
/// boundary and whose depth differs from the median of valid window depths
/// by more than tau_edge. The median skips band pixels unless the window has
/// nothing else. Interior points are always kept.
PointCloud contour_band_filter(const PointCloud& cloud,
                               const geometry::PixelMask& obj_mask,
                               const DepthMap& depth,
                               const ContourFilterConfig& cfg = {});

/// Extent of the cloud along a unit axis.
double extent_along(const PointCloud& cloud, const Vec3& axis);

/// Scales all coordinates about the origin so the extent along `up` becomes
/// target_height. Throws DegenerateExtent when the current extent <= 1e-6 m.
PointCloud anchor_scale(const PointCloud& cloud, double target_height,
                        const Vec3& up = Vec3::UnitZ());

/// Spherical rasterization with nearest-range wins per cell (ties: lowest
/// input index). Cell intensity comes from the winning point.
RangeImage to_range_image(const PointCloud& cloud, const SensorSpec& sensor);

/// One point per valid cell at (range, beam elevation, column-center azimuth).
PointCloud from_range_image(const RangeImage& ri, const SensorSpec& sensor);

/// Unit normals from the k-nearest-neighbour covariance, oriented toward
/// `viewpoint`. Throws TooFewPoints when the cloud has fewer than k+1 points.
std::vector<Vec3> estimate_normals(const PointCloud& cloud, int k,
                                   const Vec3& viewpoint = Vec3::Zero());

/// intensity = clamp(gray * max(0, n.v) * min(1, (r_ref / r)^2), 0, 1)
/// with v the unit direction from point to sensor.
PointCloud simulate_intensity(const PointCloud& cloud,
                              std::span<const double> gray,
                              std::span<const Vec3> normals,
                              const Vec3& sensor_origin, double r_ref);

PointCloud constant_intensity(const PointCloud& cloud, double value);

// Persistence: little-endian float32 (x, y, z, intensity), 16 bytes per
// point, plus a JSON sidecar {count, frame, sensor_spec_id}.
std::vector<std::uint8_t> encode_cloud(const PointCloud& cloud);
PointCloud decode_cloud(std::span<const std::uint8_t> bytes);
void write_cloud(const std::filesystem::path& bin_path, const PointCloud& cloud,
                 std::string_view frame, std::string_view sensor_spec_id);
PointCloud read_cloud(const std::filesystem::path& bin_path);
/// Rounds coordinates and intensity to float32, matching the persisted form.
PointCloud quantize_f32(const PointCloud& cloud);

nlohmann::json encode_range_image(const RangeImage& ri);
RangeImage decode_range_image(const nlohmann::json& j);

}  // namespace veria::pointcloud
