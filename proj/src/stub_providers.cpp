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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "veria/error.hpp"
#include "veria/providers.hpp"
#include "veria/random.hpp"

namespace veria::providers {

namespace {

struct CatalogEntry {
  const char* category;
  const char* name;
  const char* description;
  const char* product;
  std::array<double, 6> dims;  // length min/max, width min/max, height min/max
  int rider;                   // -1 n/a, 0 no, 1 yes
};

constexpr CatalogEntry kCatalog[] = {
    {"construction vehicle", "compact excavator",
     "Tracked compact excavator with a yellow cab, articulated boom and digging bucket",
     "Caterpillar 308 CR", {6.8, 7.2, 2.2, 2.4, 2.5, 2.7}, -1},
    {"construction vehicle", "wheel loader",
     "Four-wheeled loader with a wide front bucket and raised operator cab",
     "Volvo L60H", {7.0, 7.4, 2.4, 2.6, 3.1, 3.3}, -1},
    {"construction vehicle", "skid steer loader",
     "Compact boxy loader with lift arms on both sides of the cab",
     "Bobcat S650", {3.4, 3.5, 1.8, 1.9, 2.0, 2.1}, -1},
    {"construction vehicle", "mobile crane",
     "Truck-mounted telescopic crane with retracted boom and outriggers stowed",
     "Liebherr LTM 1050-3.1", {10.5, 11.5, 2.5, 2.6, 3.4, 3.6}, -1},
    {"motorcycle", "sport bike",
     "Fully faired sport motorcycle with clip-on handlebars and a slim tail",
     "Yamaha YZF-R6", {2.0, 2.1, 0.69, 0.72, 1.14, 1.16}, 0},
    {"motorcycle", "scooter",
     "Step-through scooter with a flat floorboard and small wheels",
     "Honda PCX 125", {1.90, 1.95, 0.74, 0.76, 1.10, 1.12}, 0},
    {"motorcycle", "cruiser with rider",
     "Low-slung cruiser motorcycle with a seated rider in a dark jacket",
     "Harley-Davidson Street Bob", {2.30, 2.35, 0.90, 0.95, 1.55, 1.70}, 1},
    {"bicycle", "road bicycle",
     "Lightweight road bicycle with drop handlebars and thin tires",
     "Trek Domane SL 5", {1.60, 1.75, 0.42, 0.45, 0.95, 1.05}, 0},
    {"bicycle", "cargo bicycle",
     "Front-loading cargo bicycle with a wooden box between rider and front wheel",
     "Urban Arrow Family", {2.50, 2.60, 0.68, 0.70, 1.05, 1.10}, 0},
    {"bicycle", "city bicycle with rider",
     "Upright city bicycle with fenders and a seated commuter",
     "Gazelle Ultimate C8", {1.80, 1.90, 0.60, 0.65, 1.60, 1.80}, 1},
};

std::string render_entry(const CatalogEntry& e) {
  prompts::SubclassSpec spec;
  spec.category = e.category;
  spec.subclass_name = e.name;
  spec.description = e.description;
  spec.reference_product = e.product;
  for (int i = 0; i < 3; ++i) {
    spec.size_prior.min[i] = e.dims[2 * i];
    spec.size_prior.max[i] = e.dims[2 * i + 1];
  }
  if (e.rider >= 0) spec.rider_included = e.rider == 1;
  return prompts::serialize_subclass_response(spec);
}

// Entry and exit surfaces alternate in square blocks, so the cloud covers the
// whole box while staying locally smooth for the contour filter.
constexpr int kShellBlock = 8;

std::uint64_t context_bits(const ProviderContext& ctx, std::uint64_t salt) {
  return mix64(fnv1a64(ctx.candidate_id) ^ mix64(ctx.seed ^ salt));
}

}  // namespace

std::string StubSubclassSource::subclass_response(std::string_view category,
                                                  std::string_view /*prompt*/,
                                                  const ProviderContext& ctx) {
  std::vector<const CatalogEntry*> matches;
  for (const auto& e : kCatalog) {
    if (category == e.category) matches.push_back(&e);
  }
  if (matches.empty()) {
    CatalogEntry generic{"", "generic object",
                         "Generic rigid object resting on the road surface",
                         "n/a", {1.0, 2.0, 1.0, 2.0, 1.0, 2.0}, -1};
    return render_entry(generic);
  }
  const auto pick = context_bits(ctx, 0x5eb) % matches.size();
  return render_entry(*matches[pick]);
}

ImageBuffer StubInpainter::inpaint(const ImageBuffer& patch,
                                   std::string_view condition,
                                   const PixelMask& mask,
                                   const ProviderContext& ctx) {
  if (mask.width() != patch.width || mask.height() != patch.height) {
    throw Error(ErrorCode::kInvalidArgument, "mask does not match patch");
  }
  ImageBuffer out = patch;
  const std::uint64_t h = mix64(fnv1a64(condition) ^ mix64(ctx.seed));
  auto channel = [&](int shift) {
    return 40 + static_cast<int>((h >> shift) & 0xff) * 175 / 255;
  };
  const int base[3] = {channel(0), channel(8), channel(16)};
  const int period = 4 + static_cast<int>((h >> 24) % 8);
#pragma omp parallel for schedule(static) if (patch.height > 256)
  for (int y = 0; y < patch.height; ++y) {
    for (int x = 0; x < patch.width; ++x) {
      if (!mask.at(x, y)) continue;
      const bool light = ((x + y) / period) % 2 == 0;
      Rgb c;
      for (int k = 0; k < 3; ++k) {
        c[k] = static_cast<std::uint8_t>(light ? base[k] : base[k] * 3 / 4);
      }
      out.set(x, y, c);
    }
  }
  return out;
}

PixelMask StubSegmenter::segment(const ImageBuffer& image,
                                 const PixelRect& hint,
                                 const ProviderContext& /*ctx*/) {
  const PixelRect clipped = hint.intersect({0, 0, image.width, image.height});
  if (clipped.empty()) {
    throw Error(ErrorCode::kEmptySegmentation, "hint lies outside the image");
  }
  const PixelRect eroded{clipped.left + 2, clipped.top + 2, clipped.right - 2,
                         clipped.bottom - 2};
  if (eroded.empty()) {
    throw Error(ErrorCode::kEmptySegmentation, "hint too small after erosion");
  }
  PixelMask mask(image.width, image.height);
  for (int y = eroded.top; y < eroded.bottom; ++y) {
    for (int x = eroded.left; x < eroded.right; ++x) mask.set(x, y);
  }
  return mask;
}

namespace {

// Ray parameters (entry, exit) of the camera-frame ray through pixel center
// against the box; since the ray direction has unit z, the parameters are the
// camera-frame depths.
bool intersect_box(const geometry::Vec3& origin_local,
                   const geometry::Vec3& dir_local, const geometry::Vec3& half,
                   double& t_enter, double& t_exit) {
  t_enter = -std::numeric_limits<double>::infinity();
  t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir_local[a] == 0.0) {
      if (std::abs(origin_local[a]) > half[a]) return false;
      continue;
    }
    double t1 = (-half[a] - origin_local[a]) / dir_local[a];
    double t2 = (half[a] - origin_local[a]) / dir_local[a];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
  }
  return t_enter > geometry::kDepthEpsilon && t_exit > t_enter;
}

}  // namespace

DepthMap StubDepthEstimator::estimate_depth(const ImageBuffer& image,
                                            const ProviderContext& ctx) {
  if (image.width <= 0 || image.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "zero-size image");
  }
  DepthMap out(image.width, image.height);
  switch (scene_.kind) {
    case StubDepthScene::Kind::kPlane:
      for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) out.set(x, y, scene_.plane_depth);
      }
      return out;
    case StubDepthScene::Kind::kRamp:
      for (int y = 0; y < image.height; ++y) {
        const double d = scene_.ramp_a + scene_.ramp_b * y;
        if (!(d > 0.0)) continue;
        for (int x = 0; x < image.width; ++x) out.set(x, y, d);
      }
      return out;
    case StubDepthScene::Kind::kBox:
      break;
  }
  if (!ctx.box) {
    throw Error(ErrorCode::kInvalidArgument, "box depth scene needs a box");
  }
  const auto& box = *ctx.box;
  const auto& cam = ctx.camera;
  const double u = scene_.outcome.latent(ctx);
  const bool good = scene_.outcome.geo_good(u);
  RandomStream scale_stream(context_bits(ctx, 0xdeb7));
  const double scale = scale_stream.uniform(scene_.scale_min, scene_.scale_max);

  // Camera origin and ray directions expressed in the box frame.
  const geometry::Mat3 to_box =
      geometry::RigidTransform::rotation_z(-box.yaw).rotation;
  const geometry::Mat3 cam_to_sensor = ctx.sensor_to_camera.rotation.transpose();
  const geometry::Vec3 origin_local =
      to_box * (ctx.sensor_to_camera.apply_inverse(geometry::Vec3::Zero()) -
                box.center);
  const geometry::Mat3 dir_map = to_box * cam_to_sensor;
  const geometry::Vec3 half = 0.5 * box.size;

  // Rays outside the projected corner bounds cannot hit the box; fall back to
  // the full image when a corner lies behind the camera.
  int x0 = 0, y0 = 0, x1 = image.width, y1 = image.height;
  {
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    bool all_front = true;
    for (const auto& c : geometry::box_corners(box)) {
      const geometry::Vec3 pc = ctx.sensor_to_camera.apply(c);
      if (pc.z() <= 1e-6) {
        all_front = false;
        break;
      }
      const double u = cam.fx * pc.x() / pc.z() + cam.cx;
      const double v = cam.fy * pc.y() / pc.z() + cam.cy;
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    if (all_front) {
      x0 = std::clamp(static_cast<int>(std::floor(umin)) - 1, 0, image.width);
      x1 = std::clamp(static_cast<int>(std::ceil(umax)) + 1, 0, image.width);
      y0 = std::clamp(static_cast<int>(std::floor(vmin)) - 1, 0, image.height);
      y1 = std::clamp(static_cast<int>(std::ceil(vmax)) + 1, 0, image.height);
    }
  }

#pragma omp parallel for schedule(static) if (y1 - y0 > 64)
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const geometry::Vec3 dir_cam((x + 0.5 - cam.cx) / cam.fx,
                                   (y + 0.5 - cam.cy) / cam.fy, 1.0);
      double t0, t1;
      if (!intersect_box(origin_local, dir_map * dir_cam, half, t0, t1)) {
        continue;
      }
      const bool exit_cell = (x / kShellBlock + y / kShellBlock) % 2 == 1;
      double d = exit_cell ? t1 : t0;
      if (!good && exit_cell) {
        d = t1 + scene_.streak_m + scene_.streak_factor * (t1 - t0);
      }
      out.set(x, y, d * scale);
    }
  }
  return out;
}

prompts::SemanticVerdict StubSemanticVerifier::verdict_for_latent(
    double u, std::uint64_t detail_bits) const {
  using prompts::Severity;
  using prompts::YesNo;
  prompts::SemanticVerdict v;
  const double sem = model_.p_sem();
  if (u < sem) {
    v.q1_category_match = YesNo::kYes;
    v.q2_scene_plausible = YesNo::kYes;
    v.q3_artifact_severity = Severity::kNone;
    v.q4_comment = "stub: object matches the subclass and blends with the scene";
    return v;
  }
  // Partition [p_sem, 1) over the seven failing answer combinations in
  // proportion to their probability under independent questions.
  double w = u - sem;
  bool a1 = false, a2 = false, a3 = false;
  bool chosen = false;
  for (int combo = 0; combo < 8 && !chosen; ++combo) {
    const bool c1 = (combo & 4) == 0;
    const bool c2 = (combo & 2) == 0;
    const bool c3 = (combo & 1) == 0;
    if (c1 && c2 && c3) continue;
    const double p = (c1 ? model_.q1_yes : 1.0 - model_.q1_yes) *
                     (c2 ? model_.q2_yes : 1.0 - model_.q2_yes) *
                     (c3 ? model_.q3_none : 1.0 - model_.q3_none);
    a1 = c1;
    a2 = c2;
    a3 = c3;
    if (w < p) chosen = true;
    w -= p;
  }
  v.q1_category_match = a1 ? YesNo::kYes : YesNo::kNo;
  v.q2_scene_plausible = a2 ? YesNo::kYes : YesNo::kNo;
  static constexpr Severity kBad[] = {Severity::kMinor, Severity::kMedium,
                                      Severity::kSevere};
  v.q3_artifact_severity = a3 ? Severity::kNone : kBad[detail_bits % 3];
  v.q4_comment = "stub: rejected";
  if (!a1 && a2 && a3) {
    // The only failing combination with q1 as sole cause.
    v.q4_comment = "stub: object does not match the requested subclass";
  }
  return v;
}

prompts::SemanticVerdict StubSemanticVerifier::verify_semantic(
    const ImageBuffer& /*scene_marked*/, const ImageBuffer& /*crop*/,
    std::span<const prompts::ConversationTurn> turns,
    const ProviderContext& ctx) {
  if (turns.size() != 4) {
    throw Error(ErrorCode::kMalformedResponse, "expected four turns");
  }
  return verdict_for_latent(model_.latent(ctx), context_bits(ctx, 0x5e7));
}

}  // namespace veria::providers
