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

#include "veria/http_provider.hpp"

#include <chrono>
#include <mutex>

#include <httplib.h>

#include "veria/codec.hpp"
#include "veria/error.hpp"
#include "veria/image_io.hpp"

namespace veria::providers {

namespace wire {

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::kMalformedResponse,
                std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) {
    throw Error(ErrorCode::kMalformedResponse,
                std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

json encode_image(const ImageBuffer& image) {
  return codec::base64_encode(image_io::encode_png(image));
}

ImageBuffer decode_image(const json& j) {
  if (!j.is_string()) {
    throw Error(ErrorCode::kMalformedResponse, "image must be base64 string");
  }
  return image_io::decode_png(codec::base64_decode(j.get<std::string>()));
}

json encode_mask(const PixelMask& mask) {
  return codec::base64_encode(image_io::encode_mask_png(mask));
}

PixelMask decode_mask(const json& j) {
  if (!j.is_string()) {
    throw Error(ErrorCode::kMalformedResponse, "mask must be base64 string");
  }
  return image_io::decode_mask_png(codec::base64_decode(j.get<std::string>()));
}

json inpaint_request(const ImageBuffer& patch, const PixelMask& mask,
                     std::string_view prompt, std::uint64_t seed,
                     int max_side) {
  return {{"image", encode_image(patch)},
          {"mask", encode_mask(mask)},
          {"prompt", std::string(prompt)},
          {"seed", seed},
          {"max_side", max_side}};
}

json inpaint_response(const ImageBuffer& image) {
  return {{"image", encode_image(image)}};
}

ImageBuffer parse_inpaint_response(const json& j) {
  return decode_image(require(j, "image"));
}

json segment_request(const ImageBuffer& image, const PixelRect& hint) {
  return {{"image", encode_image(image)},
          {"hint_rect", {hint.left, hint.top, hint.right, hint.bottom}}};
}

json segment_response(const PixelMask& mask) {
  return {{"mask", encode_mask(mask)}};
}

PixelMask parse_segment_response(const json& j) {
  return decode_mask(require(j, "mask"));
}

json depth_request(const ImageBuffer& image) {
  return {{"image", encode_image(image)}};
}

json depth_response(const DepthMap& depth) {
  std::vector<std::uint8_t> raw;
  raw.reserve(depth.depth.size() * 4);
  geometry::PixelMask valid(depth.width, depth.height);
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    codec::append_f32_le(raw, depth.valid[i] ? static_cast<float>(depth.depth[i])
                                             : 0.0f);
    valid.bits()[i] = depth.valid[i];
  }
  return {{"depth_f32_le", codec::base64_encode(raw)},
          {"valid_mask", encode_mask(valid)}};
}

DepthMap parse_depth_response(const json& j, int width, int height) {
  const auto raw = codec::base64_decode(require_string(j, "depth_f32_le"));
  if (raw.size() != static_cast<std::size_t>(width) * height * 4) {
    throw Error(ErrorCode::kMalformedResponse, "depth payload size mismatch");
  }
  const auto valid = decode_mask(require(j, "valid_mask"));
  if (valid.width() != width || valid.height() != height) {
    throw Error(ErrorCode::kMalformedResponse, "valid mask size mismatch");
  }
  DepthMap out(width, height);
  for (std::size_t i = 0; i < out.depth.size(); ++i) {
    const double d = codec::read_f32_le(raw, 4 * i);
    if (valid.bits()[i] && d > 0.0 && std::isfinite(d)) {
      out.depth[i] = d;
      out.valid[i] = 1;
    }
  }
  return out;
}

json verify_request(const ImageBuffer& scene, const ImageBuffer& crop,
                    std::span<const prompts::ConversationTurn> turns,
                    std::uint64_t seed, int max_new_tokens) {
  json jt = json::array();
  for (const auto& t : turns) {
    json history = json::array();
    for (const auto& qa : t.history) {
      history.push_back({{"question", qa.question}, {"answer", qa.answer}});
    }
    jt.push_back({{"question", t.text}, {"history", history}});
  }
  return {{"scene_image", encode_image(scene)},
          {"crop_image", encode_image(crop)},
          {"turns", jt},
          {"seed", seed},
          {"max_new_tokens", max_new_tokens}};
}

json verify_response(const prompts::SemanticVerdict& v) {
  return {{"q1", std::string(prompts::to_string(v.q1_category_match))},
          {"q2", std::string(prompts::to_string(v.q2_scene_plausible))},
          {"q3", std::string(prompts::to_string(v.q3_artifact_severity))},
          {"q4", v.q4_comment}};
}

prompts::SemanticVerdict parse_verify_response(const json& j) {
  return prompts::parse_verdict(require_string(j, "q1"), require_string(j, "q2"),
                                require_string(j, "q3"), require_string(j, "q4"));
}

json health_response(std::string_view status) {
  return {{"status", std::string(status)},
          {"models",
           {{"inpainter", "stub"},
            {"verifier", "stub"},
            {"segmenter", "stub"},
            {"depth", "stub"}}}};
}

json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", std::string(code)}, {"message", std::string(message)}}}};
}

}  // namespace wire

// ---------------------------------------------------------------------------

HttpProvider::HttpProvider(ProviderEndpoint endpoint, int max_new_tokens)
    : endpoint_(std::move(endpoint)), max_new_tokens_(max_new_tokens) {
  endpoint_.validate();
}

namespace {

ErrorCode classify_status(int status, const nlohmann::json& body) {
  if (body.is_object() && body.contains("error") &&
      body["error"].contains("code") && body["error"]["code"].is_string()) {
    const auto code = body["error"]["code"].get<std::string>();
    if (code == "timeout") return ErrorCode::kTimeout;
    if (code == "unavailable" || code == "loading") {
      return ErrorCode::kProviderUnavailable;
    }
    if (code == "malformed_response") return ErrorCode::kMalformedResponse;
    if (code == "empty_segmentation") return ErrorCode::kEmptySegmentation;
  }
  if (status == 408 || status == 504) return ErrorCode::kTimeout;
  if (status >= 500) return ErrorCode::kProviderUnavailable;
  return ErrorCode::kProviderRejected;
}

}  // namespace

nlohmann::json HttpProvider::send_once(const std::string& method,
                                       const std::string& path,
                                       const nlohmann::json* body) {
  attempts_.fetch_add(1);
  httplib::Client client(endpoint_.base_url);
  const auto secs = static_cast<time_t>(endpoint_.timeout_s);
  const auto usecs = static_cast<time_t>((endpoint_.timeout_s - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (endpoint_.auth_token) {
    headers.emplace("Authorization", "Bearer " + *endpoint_.auth_token);
  }
  httplib::Result res =
      method == "GET"
          ? client.Get(path, headers)
          : client.Post(path, headers, body->dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write) {
      throw Error(ErrorCode::kTimeout, path + ": " + httplib::to_string(err));
    }
    throw Error(ErrorCode::kProviderUnavailable,
                path + ": " + httplib::to_string(err));
  }
  nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (res->status != 200) {
    const std::string msg =
        parsed.is_object() && parsed.contains("error")
            ? parsed["error"].value("message", std::string{})
            : res->body;
    throw Error(classify_status(res->status, parsed),
                path + " -> HTTP " + std::to_string(res->status) + ": " + msg);
  }
  if (parsed.is_discarded()) {
    throw Error(ErrorCode::kMalformedResponse, path + ": body is not JSON");
  }
  return parsed;
}

nlohmann::json HttpProvider::post(const std::string& path,
                                  const nlohmann::json& body) {
  for (int attempt = 0;; ++attempt) {
    try {
      return send_once("POST", path, &body);
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::kProviderUnavailable ||
                             e.code() == ErrorCode::kTimeout;
      if (!transient || attempt >= endpoint_.max_retries) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(20 << attempt));
    }
  }
}

nlohmann::json HttpProvider::health() { return send_once("GET", "/v1/health", nullptr); }

ImageBuffer HttpProvider::inpaint(const ImageBuffer& patch,
                                  std::string_view condition,
                                  const PixelMask& mask,
                                  const ProviderContext& ctx) {
  const auto j = post("/v1/inpaint",
                      wire::inpaint_request(patch, mask, condition, ctx.seed,
                                            std::max(patch.width, patch.height)));
  ImageBuffer out = wire::parse_inpaint_response(j);
  if (out.width != patch.width || out.height != patch.height) {
    throw Error(ErrorCode::kMalformedResponse, "inpaint changed image size");
  }
  return out;
}

PixelMask HttpProvider::segment(const ImageBuffer& image, const PixelRect& hint,
                                const ProviderContext& /*ctx*/) {
  auto mask = wire::parse_segment_response(
      post("/v1/segment", wire::segment_request(image, hint)));
  if (mask.width() != image.width || mask.height() != image.height) {
    throw Error(ErrorCode::kMalformedResponse, "segment mask size mismatch");
  }
  if (mask.empty()) {
    throw Error(ErrorCode::kEmptySegmentation, "segmenter returned no pixels");
  }
  return mask;
}

DepthMap HttpProvider::estimate_depth(const ImageBuffer& image,
                                      const ProviderContext& /*ctx*/) {
  return wire::parse_depth_response(post("/v1/depth", wire::depth_request(image)),
                                    image.width, image.height);
}

prompts::SemanticVerdict HttpProvider::verify_semantic(
    const ImageBuffer& scene_marked, const ImageBuffer& crop,
    std::span<const prompts::ConversationTurn> turns,
    const ProviderContext& ctx) {
  return wire::parse_verify_response(
      post("/v1/verify", wire::verify_request(scene_marked, crop, turns,
                                              ctx.seed, max_new_tokens_)));
}

// ---------------------------------------------------------------------------

struct StubGatewayServer::Impl {
  Options options;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::mutex mu;
  int fail_count = 0;
  int fail_status = 503;
  StubInpainter inpainter;
  StubSegmenter segmenter;
  StubDepthEstimator depth;
  StubSemanticVerifier verifier;

  explicit Impl(Options o)
      : options(std::move(o)),
        depth(options.depth_scene),
        verifier(options.outcome) {}
};

StubGatewayServer::StubGatewayServer(Options options)
    : impl_(std::make_unique<Impl>(std::move(options))) {
  using nlohmann::json;
  auto& srv = impl_->server;
  Impl* impl = impl_.get();

  auto reply = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };

  // Wraps a JSON handler with auth, failure injection and error mapping.
  auto handler = [this, impl, reply](auto fn) {
    return [this, impl, reply, fn](const httplib::Request& req,
                                   httplib::Response& res) {
      served_.fetch_add(1);
      {
        std::lock_guard lock(impl->mu);
        if (impl->fail_count > 0) {
          --impl->fail_count;
          const int st = impl->fail_status;
          reply(res, st,
                wire::error_body(st >= 500 ? "unavailable" : "rejected",
                                 "injected failure"));
          return;
        }
      }
      if (!impl->options.bearer_token.empty() &&
          req.get_header_value("Authorization") !=
              "Bearer " + impl->options.bearer_token) {
        reply(res, 401, wire::error_body("unauthorized", "bad bearer token"));
        return;
      }
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) {
        reply(res, 400, wire::error_body("bad_request", "body is not a JSON object"));
        return;
      }
      try {
        reply(res, 200, fn(body));
      } catch (const Error& e) {
        const int st = e.code() == ErrorCode::kEmptySegmentation ? 422 : 400;
        const char* code = e.code() == ErrorCode::kEmptySegmentation
                               ? "empty_segmentation"
                               : "bad_request";
        reply(res, st, wire::error_body(code, e.what()));
      } catch (const std::exception& e) {
        reply(res, 400, wire::error_body("bad_request", e.what()));
      }
    };
  };

  srv.Get("/v1/health", [this, reply](const httplib::Request&,
                                      httplib::Response& res) {
    served_.fetch_add(1);
    reply(res, 200, wire::health_response("ok"));
  });

  srv.Post("/v1/inpaint", handler([impl](const json& b) {
             const auto image = wire::decode_image(b.at("image"));
             const auto mask = wire::decode_mask(b.at("mask"));
             ProviderContext ctx;
             ctx.seed = b.value("seed", std::uint64_t{42});
             return wire::inpaint_response(impl->inpainter.inpaint(
                 image, b.at("prompt").get<std::string>(), mask, ctx));
           }));
  srv.Post("/v1/segment", handler([impl](const json& b) {
             const auto image = wire::decode_image(b.at("image"));
             const auto r = b.at("hint_rect");
             const PixelRect hint{r.at(0).get<int>(), r.at(1).get<int>(),
                                  r.at(2).get<int>(), r.at(3).get<int>()};
             return wire::segment_response(
                 impl->segmenter.segment(image, hint, ProviderContext{}));
           }));
  srv.Post("/v1/depth", handler([impl](const json& b) {
             const auto image = wire::decode_image(b.at("image"));
             return wire::depth_response(
                 impl->depth.estimate_depth(image, ProviderContext{}));
           }));
  srv.Post("/v1/verify", handler([impl](const json& b) {
             const auto scene = wire::decode_image(b.at("scene_image"));
             const auto crop = wire::decode_image(b.at("crop_image"));
             std::vector<std::string> answers;
             std::vector<prompts::ConversationTurn> turns;
             for (const auto& t : b.at("turns")) {
               prompts::ConversationTurn turn;
               turn.index = static_cast<int>(turns.size()) + 1;
               turn.text = t.at("question").get<std::string>();
               turns.push_back(std::move(turn));
             }
             ProviderContext ctx;
             ctx.seed = b.value("seed", std::uint64_t{42});
             return wire::verify_response(
                 impl->verifier.verify_semantic(scene, crop, turns, ctx));
           }));
}

StubGatewayServer::~StubGatewayServer() { stop(); }

int StubGatewayServer::start() {
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  if (impl_->port <= 0) {
    throw Error(ErrorCode::kProviderUnavailable, "cannot bind stub gateway");
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void StubGatewayServer::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

std::string StubGatewayServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

void StubGatewayServer::inject_failures(int count, int http_status) {
  std::lock_guard lock(impl_->mu);
  impl_->fail_count = count;
  impl_->fail_status = http_status;
}

}  // namespace veria::providers
