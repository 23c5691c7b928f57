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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veria/geometry.hpp"
#include "veria/image.hpp"
#include "veria/prompts.hpp"

namespace veria::providers {

using geometry::PixelMask;
using geometry::PixelRect;

/// Connection settings for a remote gateway.
struct ProviderEndpoint {
  std::string base_url = "http://127.0.0.1:8080";
  double timeout_s = 60.0;
  int max_retries = 2;
  std::optional<std::string> auth_token;

  void validate() const;
};

/// Per-call context. Remote providers forward only the seed; stubs use the
/// rest to produce analytic outputs.
struct ProviderContext {
  std::string candidate_id;
  std::uint64_t seed = 42;
  std::optional<geometry::Box3D> box;  // sampled box, sensor frame
  geometry::CameraIntrinsics camera;   // intrinsics of the image passed in
  geometry::RigidTransform sensor_to_camera;
};

enum class Stage { kSubclass, kInpaint, kVerify, kSegment, kDepth };
std::string_view to_string(Stage s);

/// Common base so the orchestrator can time every call the same way.
class Provider {
 public:
  virtual ~Provider() = default;
  /// Stubs report a fixed modeled latency so logs stay reproducible; remote
  /// providers return nullopt and are timed with a wall clock.
  virtual std::optional<double> modeled_latency_s() const { return std::nullopt; }
};

class SubclassSource : public virtual Provider {
 public:
  /// Raw subclass-specification response text for a category.
  virtual std::string subclass_response(std::string_view category,
                                        std::string_view prompt,
                                        const ProviderContext& ctx) = 0;
};

class Inpainter : public virtual Provider {
 public:
  virtual ImageBuffer inpaint(const ImageBuffer& patch,
                              std::string_view condition,
                              const PixelMask& mask,
                              const ProviderContext& ctx) = 0;
};

class Segmenter : public virtual Provider {
 public:
  virtual PixelMask segment(const ImageBuffer& image, const PixelRect& hint,
                            const ProviderContext& ctx) = 0;
};

class DepthEstimator : public virtual Provider {
 public:
  virtual DepthMap estimate_depth(const ImageBuffer& image,
                                  const ProviderContext& ctx) = 0;
};

class SemanticVerifier : public virtual Provider {
 public:
  virtual prompts::SemanticVerdict verify_semantic(
      const ImageBuffer& scene_marked, const ImageBuffer& crop,
      std::span<const prompts::ConversationTurn> turns,
      const ProviderContext& ctx) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic stubs

/// Joint outcome model shared by the stub verifier and stub depth estimator.
/// A single latent u ~ U[0,1) per candidate decides both events so that the
/// joint pass rate can be set independently of the marginals:
///   sem  <=> u < p_sem
///   geo  <=> u < p_joint  or  p_sem <= u < p_sem + (p_geo - p_joint)
struct StubOutcomeModel {
  double q1_yes = 1.0;
  double q2_yes = 1.0;
  double q3_none = 1.0;
  double p_geo = 1.0;
  double p_joint = 1.0;
  std::uint64_t salt = 0;

  double p_sem() const { return q1_yes * q2_yes * q3_none; }
  void validate() const;

  double latent(const ProviderContext& ctx) const;
  bool geo_good(double u) const;

  /// Marginals set from (P(S_sem), P(S_geo), P(S_sem & S_geo)) in percent.
  static StubOutcomeModel from_rates(double sem_pct, double geo_pct,
                                     double joint_pct);
  /// Named reference configurations, e.g. "nuscenes/qwen3vl/moge2".
  static std::optional<StubOutcomeModel> preset(std::string_view name);
  static std::vector<std::string> preset_names();
};

struct StubLatencies {
  double subclass = 2.36;
  double inpaint = 1.08;
  double verify = 2.36;
  double segment = 0.14;
  double depth = 0.39;
};

class StubSubclassSource : public SubclassSource {
 public:
  explicit StubSubclassSource(double latency_s = 2.36) : latency_(latency_s) {}
  std::string subclass_response(std::string_view category,
                                std::string_view prompt,
                                const ProviderContext& ctx) override;
  std::optional<double> modeled_latency_s() const override { return latency_; }

 private:
  double latency_;
};

/// Fills the mask with a procedural texture keyed by hash(condition, seed);
/// pixels outside the mask are copied bit-exactly.
class StubInpainter : public Inpainter {
 public:
  explicit StubInpainter(double latency_s = 1.08) : latency_(latency_s) {}
  ImageBuffer inpaint(const ImageBuffer& patch, std::string_view condition,
                      const PixelMask& mask,
                      const ProviderContext& ctx) override;
  std::optional<double> modeled_latency_s() const override { return latency_; }

 private:
  double latency_;
};

/// Returns the hint rectangle (clipped to the image) eroded by 2 px.
class StubSegmenter : public Segmenter {
 public:
  explicit StubSegmenter(double latency_s = 0.14) : latency_(latency_s) {}
  PixelMask segment(const ImageBuffer& image, const PixelRect& hint,
                    const ProviderContext& ctx) override;
  std::optional<double> modeled_latency_s() const override { return latency_; }

 private:
  double latency_;
};

struct StubDepthScene {
  enum class Kind { kPlane, kRamp, kBox };
  Kind kind = Kind::kPlane;
  double plane_depth = 10.0;  // kPlane
  double ramp_a = 5.0;        // kRamp: d(row) = a + b * row
  double ramp_b = 0.01;
  // kBox: renders ctx.box. 8 px blocks alternate between the entry and exit
  // surface so the cloud spans the whole box. Candidates whose
  // latent marks a geometric failure get exit depths streaked by
  // streak_m + streak_factor * chord.
  StubOutcomeModel outcome;
  double streak_m = 4.0;
  double streak_factor = 3.0;
  // Monocular scale ambiguity: depths are multiplied by a per-candidate
  // factor drawn from [scale_min, scale_max].
  double scale_min = 1.0;
  double scale_max = 1.0;
};

class StubDepthEstimator : public DepthEstimator {
 public:
  explicit StubDepthEstimator(StubDepthScene scene = {},
                              double latency_s = 0.39)
      : scene_(scene), latency_(latency_s) {}
  DepthMap estimate_depth(const ImageBuffer& image,
                          const ProviderContext& ctx) override;
  std::optional<double> modeled_latency_s() const override { return latency_; }

 private:
  StubDepthScene scene_;
  double latency_;
};

/// Verdicts drawn from the latent of StubOutcomeModel; identical candidate
/// context gives an identical verdict.
class StubSemanticVerifier : public SemanticVerifier {
 public:
  explicit StubSemanticVerifier(StubOutcomeModel model = {},
                                double latency_s = 2.36)
      : model_(model), latency_(latency_s) {}
  prompts::SemanticVerdict verify_semantic(
      const ImageBuffer& scene_marked, const ImageBuffer& crop,
      std::span<const prompts::ConversationTurn> turns,
      const ProviderContext& ctx) override;
  std::optional<double> modeled_latency_s() const override { return latency_; }

  prompts::SemanticVerdict verdict_for_latent(double u,
                                              std::uint64_t detail_bits) const;

 private:
  StubOutcomeModel model_;
  double latency_;
};

}  // namespace veria::providers
