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

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "veria/providers.hpp"

namespace veria::providers {

/// JSON encoders and decoders for the gateway wire protocol. Images and masks
/// travel as base64 PNG; depth as base64 little-endian float32, row-major.
namespace wire {

using nlohmann::json;

json encode_image(const ImageBuffer& image);
ImageBuffer decode_image(const json& j);
json encode_mask(const PixelMask& mask);
PixelMask decode_mask(const json& j);

json inpaint_request(const ImageBuffer& patch, const PixelMask& mask,
                     std::string_view prompt, std::uint64_t seed, int max_side);
json inpaint_response(const ImageBuffer& image);
ImageBuffer parse_inpaint_response(const json& j);

json segment_request(const ImageBuffer& image, const PixelRect& hint);
json segment_response(const PixelMask& mask);
PixelMask parse_segment_response(const json& j);

json depth_request(const ImageBuffer& image);
json depth_response(const DepthMap& depth);
DepthMap parse_depth_response(const json& j, int width, int height);

json verify_request(const ImageBuffer& scene, const ImageBuffer& crop,
                    std::span<const prompts::ConversationTurn> turns,
                    std::uint64_t seed, int max_new_tokens);
json verify_response(const prompts::SemanticVerdict& v);
/// Throws MalformedResponse when a field is missing or not normalizable.
prompts::SemanticVerdict parse_verify_response(const json& j);

json health_response(std::string_view status);
json error_body(std::string_view code, std::string_view message);

}  // namespace wire

/// Client for a remote gateway implementing all four generative capabilities.
/// Retries ProviderUnavailable and Timeout up to max_retries times; never
/// retries ProviderRejected.
class HttpProvider : public Inpainter,
                     public Segmenter,
                     public DepthEstimator,
                     public SemanticVerifier {
 public:
  explicit HttpProvider(ProviderEndpoint endpoint, int max_new_tokens = 512);

  ImageBuffer inpaint(const ImageBuffer& patch, std::string_view condition,
                      const PixelMask& mask,
                      const ProviderContext& ctx) override;
  PixelMask segment(const ImageBuffer& image, const PixelRect& hint,
                    const ProviderContext& ctx) override;
  DepthMap estimate_depth(const ImageBuffer& image,
                          const ProviderContext& ctx) override;
  prompts::SemanticVerdict verify_semantic(
      const ImageBuffer& scene_marked, const ImageBuffer& crop,
      std::span<const prompts::ConversationTurn> turns,
      const ProviderContext& ctx) override;

  /// GET /v1/health. Throws ProviderUnavailable when unreachable.
  nlohmann::json health();

  /// Total HTTP attempts made, including retries.
  long attempts() const { return attempts_.load(); }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);
  nlohmann::json send_once(const std::string& method, const std::string& path,
                           const nlohmann::json* body);

  ProviderEndpoint endpoint_;
  int max_new_tokens_;
  std::atomic<long> attempts_{0};
};

/// In-process reference server speaking the wire protocol on top of the stub
/// providers. Used for client tests and for exercising HTTP mode without
/// models.
class StubGatewayServer {
 public:
  struct Options {
    StubDepthScene depth_scene;
    StubOutcomeModel outcome;
    std::string bearer_token;  // empty: no auth
  };

  explicit StubGatewayServer(Options options);
  ~StubGatewayServer();
  StubGatewayServer(const StubGatewayServer&) = delete;
  StubGatewayServer& operator=(const StubGatewayServer&) = delete;

  /// Binds to 127.0.0.1 on a free port and serves in a background thread.
  int start();
  void stop();
  std::string base_url() const;

  /// Forces the next `count` requests to fail with the given HTTP status.
  void inject_failures(int count, int http_status);
  long requests_served() const { return served_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<long> served_{0};
};

}  // namespace veria::providers
