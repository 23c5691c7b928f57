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

#include "veria/pointcloud.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "veria/codec.hpp"
#include "veria/error.hpp"
#include "veria/image_io.hpp"

namespace veria::pointcloud {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace

void PointCloud::validate() const {
  if (!intensity.empty() && intensity.size() != points.size()) {
    invalid("intensity size does not match point count");
  }
  if (!source_px.empty() && source_px.size() != points.size()) {
    invalid("provenance size does not match point count");
  }
  for (const auto& p : points) {
    if (!p.allFinite()) invalid("non-finite point");
  }
  for (double v : intensity) {
    if (!(v >= 0.0 && v <= 1.0)) invalid("intensity outside [0, 1]");
  }
}

PointCloud PointCloud::transformed(const geometry::RigidTransform& t) const {
  PointCloud out = *this;
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (std::int64_t i = 0; i < n; ++i) out.points[i] = t.apply(points[i]);
  return out;
}

PointCloud PointCloud::select(std::span<const std::uint8_t> keep) const {
  if (keep.size() != points.size()) invalid("selection size mismatch");
  PointCloud out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!keep[i]) continue;
    out.points.push_back(points[i]);
    if (has_intensity()) out.intensity.push_back(intensity[i]);
    if (!source_px.empty()) out.source_px.push_back(source_px[i]);
  }
  return out;
}

void PointCloud::append(const PointCloud& other) {
  const bool this_empty = points.empty();
  if (!this_empty && has_intensity() != other.has_intensity()) {
    invalid("cannot append clouds with and without intensity");
  }
  points.insert(points.end(), other.points.begin(), other.points.end());
  intensity.insert(intensity.end(), other.intensity.begin(),
                   other.intensity.end());
  if ((this_empty || !source_px.empty()) && !other.source_px.empty()) {
    source_px.insert(source_px.end(), other.source_px.begin(),
                     other.source_px.end());
  } else {
    source_px.clear();
  }
}

// ---------------------------------------------------------------------------
// Sensor model

int SensorSpec::cols() const {
  if (!(azimuth_resolution > 0.0)) return 0;
  return static_cast<int>(
      std::ceil((fov_max - fov_min) / azimuth_resolution - 1e-9));
}

void SensorSpec::validate() const {
  if (elevations.empty()) invalid("sensor has no beams");
  for (std::size_t i = 1; i < elevations.size(); ++i) {
    if (!(elevations[i] > elevations[i - 1])) {
      invalid("beam elevations must be strictly increasing");
    }
  }
  if (!(azimuth_resolution > 0.0) || !(fov_max > fov_min) ||
      fov_max - fov_min > 2.0 * std::numbers::pi + 1e-9) {
    invalid("invalid azimuth field of view");
  }
  if (!(r_min > 0.0) || !(r_max > r_min)) invalid("invalid range limits");
}

double SensorSpec::column_azimuth(int col) const {
  const double start = fov_min + col * azimuth_resolution;
  const double center = start + 0.5 * azimuth_resolution;
  // The last column may be partial; keep its center inside the field of view.
  if (center >= fov_max) return 0.5 * (start + fov_max);
  return center;
}

SensorSpec SensorSpec::uniform(std::string id, int beams, double elev_min_deg,
                               double elev_max_deg, double az_res_deg,
                               double r_min, double r_max) {
  SensorSpec s;
  s.id = std::move(id);
  s.elevations.resize(beams);
  for (int i = 0; i < beams; ++i) {
    const double t = beams > 1 ? static_cast<double>(i) / (beams - 1) : 0.0;
    s.elevations[i] = (elev_min_deg + t * (elev_max_deg - elev_min_deg)) * kDeg;
  }
  s.azimuth_resolution = az_res_deg * kDeg;
  s.r_min = r_min;
  s.r_max = r_max;
  s.validate();
  return s;
}

SensorSpec SensorSpec::beam32() {
  return uniform("32-beam", 32, -30.67, 10.67, 0.33, 0.5, 100.0);
}

SensorSpec SensorSpec::beam64() {
  return uniform("64-beam", 64, -24.9, 2.0, 0.17, 0.5, 120.0);
}

std::optional<SensorSpec> SensorSpec::preset(std::string_view id) {
  if (id == "32-beam") return beam32();
  if (id == "64-beam") return beam64();
  return std::nullopt;
}

std::optional<SensorCell> sensor_cell(const Vec3& p, const SensorSpec& sensor) {
  const double r = p.norm();
  const auto rf = static_cast<double>(static_cast<float>(r));
  if (!(rf >= sensor.r_min) || !(rf <= sensor.r_max)) return std::nullopt;

  double az = std::atan2(p.y(), p.x());
  const bool full_circle =
      sensor.fov_max - sensor.fov_min >= 2.0 * std::numbers::pi - 1e-12;
  if (full_circle && az >= sensor.fov_max) az -= 2.0 * std::numbers::pi;
  if (az < sensor.fov_min || az >= sensor.fov_max) return std::nullopt;
  const int cols = sensor.cols();
  int col = static_cast<int>(
      std::floor((az - sensor.fov_min) / sensor.azimuth_resolution));
  col = std::clamp(col, 0, cols - 1);

  const auto& el = sensor.elevations;
  const double e = std::atan2(p.z(), std::hypot(p.x(), p.y()));
  const auto it = std::lower_bound(el.begin(), el.end(), e);
  int row = static_cast<int>(it - el.begin());
  if (row == static_cast<int>(el.size())) {
    row -= 1;
  } else if (row > 0 && e - el[row - 1] <= el[row] - e) {
    row -= 1;
  }
  const int n = static_cast<int>(el.size());
  const double fallback = 0.5 * sensor.azimuth_resolution;
  const double below =
      row > 0 ? 0.5 * (el[row] - el[row - 1])
              : (n > 1 ? 0.5 * (el[1] - el[0]) : fallback);
  const double above =
      row + 1 < n ? 0.5 * (el[row + 1] - el[row])
                  : (n > 1 ? 0.5 * (el[n - 1] - el[n - 2]) : fallback);
  if (e < el[row] - below || e > el[row] + above) return std::nullopt;
  return SensorCell{row, col, r};
}

RangeImage::RangeImage(int r, int c, bool with_intensity)
    : rows(r),
      cols(c),
      range(static_cast<std::size_t>(r) * c, 0.0f),
      valid(static_cast<std::size_t>(r) * c, 0) {
  if (with_intensity) intensity.assign(range.size(), 0.0f);
}

std::size_t RangeImage::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

// ---------------------------------------------------------------------------
// Lifting and filtering

PointCloud backproject_region(const DepthMap& depth,
                              const geometry::PixelMask& obj_mask,
                              const geometry::CameraIntrinsics& cam) {
  depth.validate();
  if (obj_mask.width() != depth.width || obj_mask.height() != depth.height) {
    invalid("mask and depth dimensions differ");
  }
  const int w = depth.width;
  const int h = depth.height;
  auto usable = [&](int x, int y) {
    return obj_mask.at(x, y) && depth.is_valid(x, y) && depth.at(x, y) > 0.0 &&
           std::isfinite(depth.at(x, y));
  };

  std::vector<std::size_t> offset(static_cast<std::size_t>(h) + 1, 0);
#pragma omp parallel for schedule(static) if (h > 128)
  for (int y = 0; y < h; ++y) {
    std::size_t c = 0;
    for (int x = 0; x < w; ++x) c += usable(x, y) ? 1 : 0;
    offset[y + 1] = c;
  }
  for (int y = 0; y < h; ++y) offset[y + 1] += offset[y];
  if (offset[h] == 0) {
    throw Error(ErrorCode::kEmptyCloud, "no masked pixel has valid depth");
  }

  PointCloud out;
  out.points.resize(offset[h]);
  out.source_px.resize(offset[h]);
#pragma omp parallel for schedule(static) if (h > 128)
  for (int y = 0; y < h; ++y) {
    std::size_t k = offset[y];
    for (int x = 0; x < w; ++x) {
      if (!usable(x, y)) continue;
      out.points[k] = geometry::backproject(x + 0.5, y + 0.5, depth.at(x, y), cam);
      out.source_px[k] = {x, y};
      ++k;
    }
  }
  return out;
}

namespace {

bool in_band(const geometry::PixelMask& mask, int x, int y, int band) {
  for (int dy = -band; dy <= band; ++dy) {
    for (int dx = -band; dx <= band; ++dx) {
      const int xx = x + dx;
      const int yy = y + dy;
      if (!mask.in_bounds(xx, yy) || !mask.at(xx, yy)) return true;
    }
  }
  return false;
}

void collect_window(const DepthMap& depth, const std::vector<std::uint8_t>& band, int x,
                    int y, int half, bool skip_band, std::vector<double>& out) {
  for (int yy = std::max(0, y - half); yy <= std::min(depth.height - 1, y + half);
       ++yy) {
    for (int xx = std::max(0, x - half); xx <= std::min(depth.width - 1, x + half);
         ++xx) {
      const std::size_t k = static_cast<std::size_t>(yy) * depth.width + xx;
      if (skip_band && band[k]) continue;
      if (depth.valid[k]) out.push_back(depth.depth[k]);
    }
  }
}

// Median of the valid window depths outside the contour band; band pixels are
// the suspects, so they only count when nothing else is available.
double window_median(const DepthMap& depth, const std::vector<std::uint8_t>& band,
                     int x, int y, int half, std::vector<double>& scratch) {
  scratch.clear();
  collect_window(depth, band, x, y, half, true, scratch);
  if (scratch.empty()) collect_window(depth, band, x, y, half, false, scratch);
  const std::size_t n = scratch.size();
  const std::size_t mid = n / 2;
  std::nth_element(scratch.begin(), scratch.begin() + mid, scratch.end());
  const double upper = scratch[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(scratch.begin(), scratch.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace

PointCloud contour_band_filter(const PointCloud& cloud,
                               const geometry::PixelMask& obj_mask,
                               const DepthMap& depth,
                               const ContourFilterConfig& cfg) {
  if (cfg.band_px < 0 || cfg.median_window < 1 || cfg.median_window % 2 == 0 ||
      !(cfg.tau_edge >= 0.0)) {
    invalid("invalid contour filter configuration");
  }
  if (cfg.band_px == 0 || cloud.empty()) return cloud;
  if (cloud.source_px.size() != cloud.size()) {
    invalid("contour filtering needs per-point source pixels");
  }
  if (obj_mask.width() != depth.width || obj_mask.height() != depth.height) {
    invalid("mask and depth dimensions differ");
  }
  const auto n = static_cast<std::int64_t>(cloud.size());
  const int half = cfg.median_window / 2;
  const int w = obj_mask.width();
  std::vector<std::uint8_t> band(static_cast<std::size_t>(w) * obj_mask.height(), 0);
  if (const auto b = obj_mask.bounds()) {
    const int rows = b->bottom - b->top;
#pragma omp parallel for schedule(static) if (rows > 64)
    for (int y = b->top; y < b->bottom; ++y) {
      for (int x = b->left; x < b->right; ++x) {
        band[static_cast<std::size_t>(y) * w + x] =
            obj_mask.at(x, y) && in_band(obj_mask, x, y, cfg.band_px);
      }
    }
  }
  std::vector<std::uint8_t> keep(cloud.size(), 1);
#pragma omp parallel if (n > 2048)
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto [x, y] = cloud.source_px[i];
      if (!obj_mask.in_bounds(x, y) || !depth.is_valid(x, y)) continue;
      if (!band[static_cast<std::size_t>(y) * w + x]) continue;
      const double med = window_median(depth, band, x, y, half, scratch);
      if (std::abs(depth.at(x, y) - med) > cfg.tau_edge) keep[i] = 0;
    }
  }
  return cloud.select(keep);
}

double extent_along(const PointCloud& cloud, const Vec3& axis) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "empty cloud");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : cloud.points) {
    const double s = p.dot(axis);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return hi - lo;
}

PointCloud anchor_scale(const PointCloud& cloud, double target_height,
                        const Vec3& up) {
  if (!(target_height > 0.0)) invalid("target height must be positive");
  if (std::abs(up.norm() - 1.0) > 1e-9) invalid("up axis must be unit length");
  const double extent = extent_along(cloud, up);
  if (!(extent > 1e-6)) {
    throw Error(ErrorCode::kDegenerateExtent,
                "vertical extent too small to anchor scale");
  }
  const double s = target_height / extent;
  PointCloud out = cloud;
  for (auto& p : out.points) p *= s;
  return out;
}

// ---------------------------------------------------------------------------
// Rasterization

namespace {

constexpr std::uint64_t kNoWinner = std::numeric_limits<std::uint64_t>::max();

// Non-negative floats order like their bit patterns, so (range bits, index)
// packs into a key whose minimum is the nearest point with the lowest index.
std::uint64_t pack_key(float range, std::size_t index) {
  return (static_cast<std::uint64_t>(std::bit_cast<std::uint32_t>(range)) << 32) |
         static_cast<std::uint64_t>(index);
}

}  // namespace

RangeImage to_range_image(const PointCloud& cloud, const SensorSpec& sensor) {
  sensor.validate();
  cloud.validate();
  if (cloud.size() >= (std::uint64_t{1} << 32) - 1) invalid("cloud too large");
  const int rows = sensor.rows();
  const int cols = sensor.cols();
  const std::size_t cells = static_cast<std::size_t>(rows) * cols;
  const auto n = static_cast<std::int64_t>(cloud.size());

  std::vector<std::uint64_t> best(cells, kNoWinner);
#pragma omp parallel if (n > 16384)
  {
    std::vector<std::uint64_t> local(cells, kNoWinner);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const auto c = sensor_cell(cloud.points[i], sensor);
      if (!c) continue;
      const std::size_t cell = static_cast<std::size_t>(c->row) * cols + c->col;
      local[cell] = std::min(local[cell],
                             pack_key(static_cast<float>(c->range), i));
    }
#pragma omp critical(veria_range_merge)
    for (std::size_t k = 0; k < cells; ++k) best[k] = std::min(best[k], local[k]);
  }

  RangeImage ri(rows, cols, cloud.has_intensity());
  for (std::size_t k = 0; k < cells; ++k) {
    if (best[k] == kNoWinner) continue;
    const auto idx = static_cast<std::size_t>(best[k] & 0xffffffffu);
    ri.range[k] = std::bit_cast<float>(static_cast<std::uint32_t>(best[k] >> 32));
    ri.valid[k] = 1;
    if (cloud.has_intensity()) {
      ri.intensity[k] = static_cast<float>(cloud.intensity[idx]);
    }
  }
  return ri;
}

PointCloud from_range_image(const RangeImage& ri, const SensorSpec& sensor) {
  sensor.validate();
  if (ri.rows != sensor.rows() || ri.cols != sensor.cols()) {
    invalid("range image does not match sensor grid");
  }
  PointCloud out;
  for (int row = 0; row < ri.rows; ++row) {
    const double e = sensor.elevations[row];
    const double ce = std::cos(e);
    const double se = std::sin(e);
    for (int col = 0; col < ri.cols; ++col) {
      const std::size_t k = ri.index(row, col);
      if (!ri.valid[k]) continue;
      const double r = ri.range[k];
      const double a = sensor.column_azimuth(col);
      out.points.emplace_back(r * ce * std::cos(a), r * ce * std::sin(a), r * se);
      if (!ri.intensity.empty()) out.intensity.push_back(ri.intensity[k]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normals and intensity

std::vector<Vec3> estimate_normals(const PointCloud& cloud, int k,
                                   const Vec3& viewpoint) {
  if (k < 2) invalid("normal estimation needs k >= 2");
  const auto n = static_cast<std::int64_t>(cloud.size());
  if (n < k + 1) {
    throw Error(ErrorCode::kTooFewPoints, "fewer than k+1 points for normals");
  }
  // Neighbours are searched outward from each point in x order and ranked by
  // (squared distance, index), which yields the same set as a full sort.
  std::vector<std::int64_t> order(cloud.size());
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    const double xa = cloud.points[a].x(), xb = cloud.points[b].x();
    return xa < xb || (xa == xb && a < b);
  });
  std::vector<std::int64_t> rank(cloud.size());
  for (std::int64_t r = 0; r < n; ++r) rank[order[r]] = r;

  std::vector<Vec3> normals(cloud.size());
#pragma omp parallel if (n > 256)
  {
    using Entry = std::pair<double, std::int64_t>;
    std::vector<Entry> heap;
    heap.reserve(static_cast<std::size_t>(k) + 2);
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i) {
      const Vec3& p = cloud.points[i];
      heap.clear();
      auto offer = [&](std::int64_t j) {
        const Entry e{(cloud.points[j] - p).squaredNorm(), j};
        if (static_cast<int>(heap.size()) <= k) {
          heap.push_back(e);
          std::push_heap(heap.begin(), heap.end());
        } else if (e < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = e;
          std::push_heap(heap.begin(), heap.end());
        }
      };
      auto open = [&](double dx) {
        return static_cast<int>(heap.size()) <= k || dx * dx <= heap.front().first;
      };
      std::int64_t lo = rank[i], hi = rank[i] + 1;
      bool go_lo = true, go_hi = true;
      while (go_lo || go_hi) {
        if (go_lo) {
          if (lo < 0 || !open(p.x() - cloud.points[order[lo]].x())) {
            go_lo = false;
          } else {
            offer(order[lo--]);
          }
        }
        if (go_hi) {
          if (hi >= n || !open(cloud.points[order[hi]].x() - p.x())) {
            go_hi = false;
          } else {
            offer(order[hi++]);
          }
        }
      }
      std::sort_heap(heap.begin(), heap.end());
      Vec3 mean = Vec3::Zero();
      for (const auto& e : heap) mean += cloud.points[e.second];
      mean /= static_cast<double>(k + 1);
      geometry::Mat3 cov = geometry::Mat3::Zero();
      for (const auto& e : heap) {
        const Vec3 d = cloud.points[e.second] - mean;
        cov += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<geometry::Mat3> es(cov);
      Vec3 nrm = es.eigenvectors().col(0).normalized();
      if (nrm.dot(viewpoint - p) < 0.0) nrm = -nrm;
      normals[i] = nrm;
    }
  }
  return normals;
}

PointCloud simulate_intensity(const PointCloud& cloud,
                              std::span<const double> gray,
                              std::span<const Vec3> normals,
                              const Vec3& sensor_origin, double r_ref) {
  if (gray.size() != cloud.size() || normals.size() != cloud.size()) {
    invalid("intensity inputs must have one entry per point");
  }
  if (!(r_ref > 0.0)) invalid("reference range must be positive");
  PointCloud out = cloud;
  out.intensity.assign(cloud.size(), 0.0);
  const auto n = static_cast<std::int64_t>(cloud.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (std::int64_t i = 0; i < n; ++i) {
    const Vec3 to_sensor = sensor_origin - cloud.points[i];
    const double r = to_sensor.norm();
    if (!(r > 0.0)) continue;
    const double cosine = std::max(0.0, normals[i].dot(to_sensor / r));
    const double falloff = std::min(1.0, (r_ref / r) * (r_ref / r));
    out.intensity[i] = std::clamp(gray[i] * cosine * falloff, 0.0, 1.0);
  }
  return out;
}

PointCloud constant_intensity(const PointCloud& cloud, double value) {
  if (!(value >= 0.0 && value <= 1.0)) invalid("intensity must be in [0, 1]");
  PointCloud out = cloud;
  out.intensity.assign(cloud.size(), value);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

std::vector<std::uint8_t> encode_cloud(const PointCloud& cloud) {
  cloud.validate();
  std::vector<std::uint8_t> out;
  out.reserve(cloud.size() * 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    codec::append_f32_le(out, static_cast<float>(p.x()));
    codec::append_f32_le(out, static_cast<float>(p.y()));
    codec::append_f32_le(out, static_cast<float>(p.z()));
    codec::append_f32_le(
        out, cloud.has_intensity() ? static_cast<float>(cloud.intensity[i]) : 0.0f);
  }
  return out;
}

PointCloud decode_cloud(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::kParseError, "cloud size is not a multiple of 16");
  }
  PointCloud out;
  const std::size_t n = bytes.size() / 16;
  out.points.resize(n);
  out.intensity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t o = i * 16;
    out.points[i] = Vec3(codec::read_f32_le(bytes, o), codec::read_f32_le(bytes, o + 4),
                         codec::read_f32_le(bytes, o + 8));
    out.intensity[i] = codec::read_f32_le(bytes, o + 12);
  }
  return out;
}

void write_cloud(const std::filesystem::path& bin_path, const PointCloud& cloud,
                 std::string_view frame, std::string_view sensor_spec_id) {
  image_io::write_file_atomic(bin_path, encode_cloud(cloud));
  const nlohmann::json sidecar = {{"count", cloud.size()},
                                  {"frame", std::string(frame)},
                                  {"sensor_spec_id", std::string(sensor_spec_id)}};
  const std::string text = sidecar.dump(2) + "\n";
  auto json_path = bin_path;
  json_path.replace_extension(".json");
  image_io::write_file_atomic(
      json_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                           text.size()));
}

PointCloud read_cloud(const std::filesystem::path& bin_path) {
  return decode_cloud(image_io::read_file(bin_path));
}

PointCloud quantize_f32(const PointCloud& cloud) {
  PointCloud out = cloud;
  auto f32 = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  for (auto& p : out.points) p = Vec3(f32(p.x()), f32(p.y()), f32(p.z()));
  for (auto& v : out.intensity) v = static_cast<float>(v);
  return out;
}

nlohmann::json encode_range_image(const RangeImage& ri) {
  std::vector<std::uint8_t> range_bytes;
  std::vector<std::uint8_t> intensity_bytes;
  for (float r : ri.range) codec::append_f32_le(range_bytes, r);
  for (float v : ri.intensity) codec::append_f32_le(intensity_bytes, v);
  std::vector<std::uint8_t> bitset((ri.valid.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < ri.valid.size(); ++k) {
    if (ri.valid[k]) bitset[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
  }
  nlohmann::json j = {{"rows", ri.rows},
                      {"cols", ri.cols},
                      {"range_f32_le", codec::base64_encode(range_bytes)},
                      {"valid_bitset", codec::base64_encode(bitset)}};
  j["intensity_f32_le"] = ri.intensity.empty()
                              ? nlohmann::json(nullptr)
                              : nlohmann::json(codec::base64_encode(intensity_bytes));
  return j;
}

RangeImage decode_range_image(const nlohmann::json& j) {
  try {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    if (rows < 0 || cols < 0) invalid("negative range image size");
    const bool has_intensity = j.contains("intensity_f32_le") &&
                               !j.at("intensity_f32_le").is_null();
    RangeImage ri(rows, cols, has_intensity);
    const std::size_t cells = ri.range.size();
    const auto range_bytes =
        codec::base64_decode(j.at("range_f32_le").get<std::string>());
    const auto bitset = codec::base64_decode(j.at("valid_bitset").get<std::string>());
    if (range_bytes.size() != cells * 4 || bitset.size() != (cells + 7) / 8) {
      throw Error(ErrorCode::kParseError, "range image payload size mismatch");
    }
    for (std::size_t k = 0; k < cells; ++k) {
      ri.range[k] = codec::read_f32_le(range_bytes, k * 4);
      ri.valid[k] = (bitset[k / 8] >> (k % 8)) & 1u;
    }
    if (has_intensity) {
      const auto ib =
          codec::base64_decode(j.at("intensity_f32_le").get<std::string>());
      if (ib.size() != cells * 4) {
        throw Error(ErrorCode::kParseError, "intensity payload size mismatch");
      }
      for (std::size_t k = 0; k < cells; ++k) {
        ri.intensity[k] = codec::read_f32_le(ib, k * 4);
      }
    }
    return ri;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

}  // namespace veria::pointcloud
