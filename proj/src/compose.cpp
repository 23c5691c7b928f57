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

#include "veria/compose.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "veria/error.hpp"
#include "veria/geoverify.hpp"

namespace veria::compose {

void InstanceAsset::validate() const {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "asset " + id);
  if (rgb.width != mask.width() || rgb.height != mask.height()) {
    throw Error(ErrorCode::kInvalidArgument, "asset cutout and mask differ");
  }
}

namespace {

using Corners2 = std::array<geometry::Vec2, 4>;

Corners2 xy_corners(const Box3D& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hx = 0.5 * b.size.x();
  const double hy = 0.5 * b.size.y();
  Corners2 out;
  const double sx[4] = {-1, 1, 1, -1};
  const double sy[4] = {-1, -1, 1, 1};
  for (int i = 0; i < 4; ++i) {
    const double u = sx[i] * hx;
    const double v = sy[i] * hy;
    out[i] = {b.center.x() + c * u - s * v, b.center.y() + s * u + c * v};
  }
  return out;
}

bool separated_on(const geometry::Vec2& axis, const Corners2& a,
                  const Corners2& b) {
  double a0 = std::numeric_limits<double>::infinity(), a1 = -a0;
  double b0 = a0, b1 = -a0;
  for (int i = 0; i < 4; ++i) {
    const double pa = axis.dot(a[i]);
    const double pb = axis.dot(b[i]);
    a0 = std::min(a0, pa);
    a1 = std::max(a1, pa);
    b0 = std::min(b0, pb);
    b1 = std::max(b1, pb);
  }
  return a1 < b0 || b1 < a0;
}

bool contains(const Box3D& b, const geometry::Vec3& p, double eps) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const geometry::Vec3 d = p - b.center;
  const double u = c * d.x() + s * d.y();
  const double v = -s * d.x() + c * d.y();
  return std::abs(u) <= 0.5 * b.size.x() + eps &&
         std::abs(v) <= 0.5 * b.size.y() + eps &&
         std::abs(d.z()) <= 0.5 * b.size.z() + eps;
}

}  // namespace

bool boxes_overlap(const Box3D& a, const Box3D& b) {
  const double az0 = a.center.z() - 0.5 * a.size.z();
  const double az1 = a.center.z() + 0.5 * a.size.z();
  const double bz0 = b.center.z() - 0.5 * b.size.z();
  const double bz1 = b.center.z() + 0.5 * b.size.z();
  if (az1 < bz0 || bz1 < az0) return false;
  const Corners2 ca = xy_corners(a);
  const Corners2 cb = xy_corners(b);
  for (double yaw : {a.yaw, b.yaw}) {
    const geometry::Vec2 ex(std::cos(yaw), std::sin(yaw));
    const geometry::Vec2 ey(-std::sin(yaw), std::cos(yaw));
    if (separated_on(ex, ca, cb) || separated_on(ey, ca, cb)) return false;
  }
  return true;
}

ClassCaps default_caps(std::string_view dataset) {
  if (dataset == "nuscenes") {
    return {{"construction vehicle", 7}, {"motorcycle", 5}, {"bicycle", 5}};
  }
  if (dataset == "lyft") return {{"motorcycle", 6}, {"bicycle", 6}};
  throw Error(ErrorCode::kConfigError,
              "unknown dataset for caps: " + std::string(dataset));
}

std::vector<InstanceAsset> select_instances(const std::vector<InstanceAsset>& db,
                                            const SceneSample& scene,
                                            const ClassCaps& caps,
                                            RandomStream& stream) {
  std::vector<std::size_t> order(db.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[stream.below(i)]);
  }

  std::vector<InstanceAsset> out;
  std::map<std::string, int> used;
  for (std::size_t idx : order) {
    const InstanceAsset& a = db[idx];
    const auto cap = caps.find(a.category);
    if (cap == caps.end() || used[a.category] >= cap->second) continue;
    const bool hits_scene =
        std::any_of(scene.boxes.begin(), scene.boxes.end(),
                    [&](const Box3D& b) { return boxes_overlap(a.box, b); });
    if (hits_scene) continue;
    const bool hits_selected =
        std::any_of(out.begin(), out.end(), [&](const InstanceAsset& s) {
          return boxes_overlap(a.box, s.box);
        });
    if (hits_selected) continue;
    ++used[a.category];
    out.push_back(a);
  }
  return out;
}

ImageBuffer composite_rgb(const SceneSample& scene,
                          const std::vector<InstanceAsset>& selected) {
  std::vector<const InstanceAsset*> order;
  for (const auto& a : selected) order.push_back(&a);
  std::stable_sort(order.begin(), order.end(),
                   [](const InstanceAsset* x, const InstanceAsset* y) {
                     return x->center_range > y->center_range;
                   });
  ImageBuffer out = scene.image;
  for (const InstanceAsset* a : order) {
    for (int y = 0; y < a->mask.height(); ++y) {
      const int sy = a->top + y;
      if (sy < 0 || sy >= out.height) continue;
      for (int x = 0; x < a->mask.width(); ++x) {
        const int sx = a->left + x;
        if (sx < 0 || sx >= out.width || !a->mask.at(x, y)) continue;
        out.set(sx, sy, a->rgb.at(x, y));
      }
    }
  }
  return out;
}

OcclusionResult remove_occluded(const PointCloud& scene_cloud,
                                const std::vector<const PointCloud*>& inserted,
                                const SensorSpec& sensor) {
  sensor.validate();
  const int cols = sensor.cols();
  const std::size_t cells = static_cast<std::size_t>(sensor.rows()) * cols;
  constexpr double kNone = std::numeric_limits<double>::infinity();
  std::vector<double> nearest(cells, kNone);
  for (const PointCloud* c : inserted) {
    for (const auto& p : c->points) {
      const auto cell = pointcloud::sensor_cell(p, sensor);
      if (!cell) continue;
      double& slot = nearest[static_cast<std::size_t>(cell->row) * cols + cell->col];
      slot = std::min(slot, cell->range);
    }
  }

  const auto n = static_cast<std::int64_t>(scene_cloud.size());
  std::vector<std::uint8_t> keep(scene_cloud.size(), 1);
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto cell = pointcloud::sensor_cell(scene_cloud.points[i], sensor);
    if (!cell) continue;
    if (nearest[static_cast<std::size_t>(cell->row) * cols + cell->col] <
        cell->range) {
      keep[i] = 0;
    }
  }

  OcclusionResult out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) out.removed.push_back(i);
  }
  out.cloud = scene_cloud.select(keep);
  out.cloud.source_px.clear();
  const bool with_intensity = scene_cloud.has_intensity();
  for (const PointCloud* c : inserted) {
    out.cloud.points.insert(out.cloud.points.end(), c->points.begin(),
                            c->points.end());
    if (!with_intensity) continue;
    if (c->has_intensity()) {
      out.cloud.intensity.insert(out.cloud.intensity.end(), c->intensity.begin(),
                                 c->intensity.end());
    } else {
      out.cloud.intensity.insert(out.cloud.intensity.end(), c->size(), 0.0);
    }
  }
  return out;
}

Box3D recover_box(const PointCloud& cloud) { return geoverify::fit_obb_xy(cloud); }

nlohmann::json labels_to_json(const std::vector<Label>& labels) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : labels) {
    arr.push_back({{"category", l.category},
                   {"box7", l.box.to_array()},
                   {"instance_id", l.instance_id},
                   {"synthetic", l.synthetic}});
  }
  return arr;
}

std::vector<Label> labels_from_json(const nlohmann::json& j) {
  try {
    std::vector<Label> out;
    for (const auto& e : j) {
      Label l;
      l.category = e.at("category").get<std::string>();
      l.box = Box3D::from_array(e.at("box7").get<std::array<double, 7>>());
      l.instance_id = e.at("instance_id").get<std::string>();
      l.synthetic = e.at("synthetic").get<bool>();
      out.push_back(std::move(l));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

ComposedScene compose_scene(const SceneSample& scene,
                            const std::vector<InstanceAsset>& db,
                            const ComposeConfig& cfg, RandomStream& stream) {
  std::vector<InstanceAsset> pool;
  for (const auto& a : db) {
    if (cfg.cross_scene || a.source_scene == scene.scene_id) pool.push_back(a);
  }
  const auto selected = select_instances(pool, scene, cfg.caps, stream);

  ComposedScene out;
  std::vector<InstanceAsset> kept;
  for (const auto& a : selected) {
    const auto inside = std::count_if(
        a.cloud.points.begin(), a.cloud.points.end(),
        [&](const geometry::Vec3& p) { return contains(a.box, p, 1e-9); });
    if (inside < cfg.p_n) {
      out.dropped_ids.push_back(a.id);
      continue;
    }
    kept.push_back(a);
  }

  out.image = composite_rgb(scene, kept);
  std::vector<const PointCloud*> clouds;
  for (const auto& a : kept) clouds.push_back(&a.cloud);
  auto occ = remove_occluded(scene.cloud, clouds, scene.sensor);
  out.cloud = std::move(occ.cloud);
  out.removed_points = occ.removed.size();

  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    Label l;
    l.category = i < scene.box_categories.size() ? scene.box_categories[i] : "";
    l.box = scene.boxes[i];
    l.instance_id = scene.scene_id + "/gt/" + std::to_string(i);
    out.labels.push_back(std::move(l));
  }
  for (const auto& a : kept) {
    out.labels.push_back({a.category, a.box, a.id, true});
    out.inserted_ids.push_back(a.id);
  }
  return out;
}

}  // namespace veria::compose
