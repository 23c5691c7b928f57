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

#include "veria/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "veria/error.hpp"

namespace veria::reference {

using pointcloud::PointCloud;

PointCloud backproject_region(const DepthMap& depth, const geometry::PixelMask& obj_mask,
                              const geometry::CameraIntrinsics& cam) {
  if (obj_mask.width() != depth.width || obj_mask.height() != depth.height) {
    throw Error(ErrorCode::kInvalidArgument, "mask and depth dimensions differ");
  }
  PointCloud out;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (!obj_mask.at(x, y) || !depth.is_valid(x, y)) continue;
      const double d = depth.at(x, y);
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      out.points.push_back(geometry::backproject(x + 0.5, y + 0.5, d, cam));
      out.source_px.push_back({x, y});
    }
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyCloud, "no masked pixel has valid depth");
  return out;
}

PointCloud contour_band_filter(const PointCloud& cloud, const geometry::PixelMask& obj_mask,
                               const DepthMap& depth,
                               const pointcloud::ContourFilterConfig& cfg) {
  if (cfg.band_px == 0) return cloud;
  const int half = cfg.median_window / 2;
  auto in_band = [&](int x, int y) {
    if (!obj_mask.in_bounds(x, y) || !obj_mask.at(x, y)) return false;
    for (int dy = -cfg.band_px; dy <= cfg.band_px; ++dy) {
      for (int dx = -cfg.band_px; dx <= cfg.band_px; ++dx) {
        if (!obj_mask.in_bounds(x + dx, y + dy) || !obj_mask.at(x + dx, y + dy)) {
          return true;
        }
      }
    }
    return false;
  };
  std::vector<std::uint8_t> keep(cloud.size(), 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto [x, y] = cloud.source_px[i];
    if (!in_band(x, y)) continue;
    std::vector<double> vals;
    for (bool skip_band : {true, false}) {
      for (int yy = y - half; yy <= y + half; ++yy) {
        for (int xx = x - half; xx <= x + half; ++xx) {
          if (xx < 0 || yy < 0 || xx >= depth.width || yy >= depth.height) continue;
          if (skip_band && in_band(xx, yy)) continue;
          if (depth.is_valid(xx, yy)) vals.push_back(depth.at(xx, yy));
        }
      }
      if (!vals.empty()) break;
    }
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    const double med = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    if (std::abs(depth.at(x, y) - med) > cfg.tau_edge) keep[i] = 0;
  }
  return cloud.select(keep);
}

pointcloud::RangeImage to_range_image(const PointCloud& cloud,
                                      const pointcloud::SensorSpec& sensor) {
  pointcloud::RangeImage ri(sensor.rows(), sensor.cols(), cloud.has_intensity());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto c = pointcloud::sensor_cell(cloud.points[i], sensor);
    if (!c) continue;
    const std::size_t k = ri.index(c->row, c->col);
    const auto r = static_cast<float>(c->range);
    // Strict comparison in input order keeps the lowest index on ties.
    if (ri.valid[k] && !(r < ri.range[k])) continue;
    ri.valid[k] = 1;
    ri.range[k] = r;
    if (cloud.has_intensity()) ri.intensity[k] = static_cast<float>(cloud.intensity[i]);
  }
  return ri;
}

std::vector<geometry::Vec3> estimate_normals(const PointCloud& cloud, int k,
                                             const geometry::Vec3& viewpoint) {
  const std::size_t n = cloud.size();
  if (static_cast<long>(n) < k + 1) {
    throw Error(ErrorCode::kTooFewPoints, "fewer than k+1 points for normals");
  }
  std::vector<geometry::Vec3> normals(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t j = 0; j < n; ++j) {
      d[j] = {(cloud.points[j] - cloud.points[i]).squaredNorm(), j};
    }
    std::nth_element(d.begin(), d.begin() + k, d.end());
    std::sort(d.begin(), d.begin() + k + 1);
    geometry::Vec3 mean = geometry::Vec3::Zero();
    for (int m = 0; m <= k; ++m) mean += cloud.points[d[m].second];
    mean /= static_cast<double>(k + 1);
    geometry::Mat3 cov = geometry::Mat3::Zero();
    for (int m = 0; m <= k; ++m) {
      const geometry::Vec3 v = cloud.points[d[m].second] - mean;
      cov += v * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<geometry::Mat3> es(cov);
    geometry::Vec3 nrm = es.eigenvectors().col(0).normalized();
    if (nrm.dot(viewpoint - cloud.points[i]) < 0.0) nrm = -nrm;
    normals[i] = nrm;
  }
  return normals;
}

compose::OcclusionResult remove_occluded(const PointCloud& scene_cloud,
                                         const std::vector<const PointCloud*>& inserted,
                                         const pointcloud::SensorSpec& sensor) {
  const int cols = sensor.cols();
  std::vector<double> nearest(static_cast<std::size_t>(sensor.rows()) * cols,
                              std::numeric_limits<double>::infinity());
  for (const PointCloud* c : inserted) {
    for (const auto& p : c->points) {
      if (const auto cell = pointcloud::sensor_cell(p, sensor)) {
        auto& slot = nearest[static_cast<std::size_t>(cell->row) * cols + cell->col];
        slot = std::min(slot, cell->range);
      }
    }
  }
  compose::OcclusionResult out;
  std::vector<std::uint8_t> keep(scene_cloud.size(), 1);
  for (std::size_t i = 0; i < scene_cloud.size(); ++i) {
    const auto cell = pointcloud::sensor_cell(scene_cloud.points[i], sensor);
    if (cell &&
        nearest[static_cast<std::size_t>(cell->row) * cols + cell->col] < cell->range) {
      keep[i] = 0;
      out.removed.push_back(i);
    }
  }
  out.cloud = scene_cloud.select(keep);
  out.cloud.source_px.clear();
  for (const PointCloud* c : inserted) {
    out.cloud.points.insert(out.cloud.points.end(), c->points.begin(), c->points.end());
    if (scene_cloud.has_intensity()) {
      if (c->has_intensity()) {
        out.cloud.intensity.insert(out.cloud.intensity.end(), c->intensity.begin(),
                                   c->intensity.end());
      } else {
        out.cloud.intensity.insert(out.cloud.intensity.end(), c->size(), 0.0);
      }
    }
  }
  return out;
}

}  // namespace veria::reference
