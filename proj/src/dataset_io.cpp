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

#include "veria/dataset_io.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "veria/codec.hpp"
#include "veria/error.hpp"
#include "veria/image_io.hpp"
#include "veria/random.hpp"

namespace veria::dataset_io {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::kConfigError, what);
}

json read_json_file(const fs::path& path) {
  const auto bytes = image_io::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  image_io::write_file_atomic(
      path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

json camera_json(const geometry::CameraIntrinsics& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy},
          {"width", c.width}, {"height", c.height}};
}

geometry::CameraIntrinsics camera_from(const json& j) {
  geometry::CameraIntrinsics c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  return c;
}

json transform_json(const geometry::RigidTransform& t) {
  std::array<double, 9> r{};
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) r[3 * i + k] = t.rotation(i, k);
  }
  return {{"rotation", r},
          {"translation", std::array<double, 3>{t.translation.x(), t.translation.y(),
                                                t.translation.z()}}};
}

geometry::RigidTransform transform_from(const json& j) {
  const auto r = j.at("rotation").get<std::array<double, 9>>();
  const auto t = j.at("translation").get<std::array<double, 3>>();
  geometry::RigidTransform out;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) out.rotation(i, k) = r[3 * i + k];
  }
  out.translation = geometry::Vec3(t[0], t[1], t[2]);
  return out;
}

json prior_json(const placement::SizePrior& p) {
  return {{"min", p.min}, {"max", p.max}};
}

placement::SizePrior prior_from(const json& j) {
  placement::SizePrior p;
  p.min = j.at("min").get<std::array<double, 3>>();
  p.max = j.at("max").get<std::array<double, 3>>();
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifests

bool SceneManifest::operator==(const SceneManifest& o) const {
  return scene_id == o.scene_id && image_path == o.image_path &&
         cloud_path == o.cloud_path && camera.fx == o.camera.fx &&
         camera.fy == o.camera.fy && camera.cx == o.camera.cx &&
         camera.cy == o.camera.cy && camera.width == o.camera.width &&
         camera.height == o.camera.height &&
         sensor_to_camera.rotation == o.sensor_to_camera.rotation &&
         sensor_to_camera.translation == o.sensor_to_camera.translation &&
         sensor_spec_id == o.sensor_spec_id && ground_height == o.ground_height &&
         boxes == o.boxes;
}

json to_json(const SceneManifest& m) {
  json boxes = json::array();
  for (const auto& b : m.boxes) {
    boxes.push_back({{"category", b.category}, {"box7", b.box.to_array()}});
  }
  return {{"scene_id", m.scene_id},
          {"image", m.image_path},
          {"cloud", m.cloud_path},
          {"camera", camera_json(m.camera)},
          {"sensor_to_camera", transform_json(m.sensor_to_camera)},
          {"sensor_spec_id", m.sensor_spec_id},
          {"ground_height", m.ground_height},
          {"boxes", boxes}};
}

SceneManifest manifest_from_json(const json& j) {
  try {
    SceneManifest m;
    m.scene_id = j.at("scene_id").get<std::string>();
    m.image_path = j.at("image").get<std::string>();
    m.cloud_path = j.at("cloud").get<std::string>();
    m.camera = camera_from(j.at("camera"));
    m.sensor_to_camera = transform_from(j.at("sensor_to_camera"));
    m.sensor_spec_id = j.at("sensor_spec_id").get<std::string>();
    m.ground_height = j.value("ground_height", -1.84);
    for (const auto& b : j.value("boxes", json::array())) {
      m.boxes.push_back({b.at("category").get<std::string>(),
                         geometry::Box3D::from_array(
                             b.at("box7").get<std::array<double, 7>>())});
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("scene manifest: ") + e.what());
  }
}

SceneManifest load_manifest(const fs::path& path) {
  SceneManifest m = manifest_from_json(read_json_file(path));
  m.base_dir = path.parent_path();
  try {
    m.camera.validate();
    m.sensor_to_camera.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  for (const auto& rel : {m.image_path, m.cloud_path}) {
    if (!fs::exists(m.base_dir / rel)) {
      throw Error(ErrorCode::kMissingAsset, (m.base_dir / rel).string());
    }
  }
  if (!pointcloud::SensorSpec::preset(m.sensor_spec_id)) {
    config_error("unknown sensor spec id: " + m.sensor_spec_id);
  }
  return m;
}

void write_manifest(const fs::path& path, const SceneManifest& m) {
  write_text_atomic(path, to_json(m).dump(2) + "\n");
}

std::vector<SceneManifest> load_manifests(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kMissingAsset, "scene directory " + dir.string());
  }
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      paths.push_back(e.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<SceneManifest> out;
  for (const auto& p : paths) out.push_back(load_manifest(p));
  return out;
}

compose::SceneSample load_scene(const SceneManifest& m) {
  compose::SceneSample s;
  s.scene_id = m.scene_id;
  s.image = image_io::read_png(m.base_dir / m.image_path);
  s.cloud = pointcloud::read_cloud(m.base_dir / m.cloud_path);
  s.camera = m.camera;
  s.sensor_to_camera = m.sensor_to_camera;
  for (const auto& b : m.boxes) {
    s.boxes.push_back(b.box);
    s.box_categories.push_back(b.category);
  }
  const auto sensor = pointcloud::SensorSpec::preset(m.sensor_spec_id);
  if (!sensor) config_error("unknown sensor spec id: " + m.sensor_spec_id);
  s.sensor = *sensor;
  if (s.image.width != m.camera.width || s.image.height != m.camera.height) {
    throw Error(ErrorCode::kParseError, "image size does not match intrinsics");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Run configuration

void RunConfig::validate() const {
  try {
    if (categories.empty()) config_error("no categories configured");
    for (const auto& [name, c] : categories) {
      c.size_prior.validate();
      if (c.max_per_class < 0 || c.candidates_per_scene < 0) {
        config_error("negative count for category " + name);
      }
    }
    region.validate();
    if (!(visibility.min_inside_fraction >= 0.0 &&
          visibility.min_inside_fraction <= 1.0) ||
        visibility.min_side_px < 1) {
      config_error("invalid visibility gate");
    }
    if (max_placement_attempts < 1) config_error("max_placement_attempts < 1");
    if (!(lambda > 0.0 && lambda <= 1.0)) config_error("lambda must be in (0, 1]");
    if (p_n < 1) config_error("p_n must be >= 1");
    sensor_spec();
    if (band_px < 0 || !(tau_edge >= 0.0)) config_error("invalid contour filter");
    if (!(crop_margin >= 0.0) || marker_width < 1) config_error("invalid crop");
    if (!(intensity.r_ref > 0.0) || intensity.normal_k < 2 ||
        !(intensity.value >= 0.0 && intensity.value <= 1.0)) {
      config_error("invalid intensity settings");
    }
    if (provider_mode == "http") {
      endpoint.validate();
    } else if (provider_mode == "stub") {
      if (!providers::StubOutcomeModel::preset(stub.preset)) {
        config_error("unknown stub preset: " + stub.preset);
      }
      if (!(stub.depth_scale_min > 0.0) ||
          !(stub.depth_scale_min <= stub.depth_scale_max)) {
        config_error("invalid stub depth scale range");
      }
    } else {
      config_error("provider mode must be stub or http");
    }
    if (max_in_flight < 1 || max_new_tokens < 1) config_error("invalid limits");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(e.what());
  }
}

compose::ClassCaps RunConfig::caps() const {
  compose::ClassCaps out;
  for (const auto& [name, c] : categories) out[name] = c.max_per_class;
  return out;
}

pointcloud::SensorSpec RunConfig::sensor_spec() const {
  const auto s = pointcloud::SensorSpec::preset(sensor);
  if (!s) config_error("unknown sensor preset: " + sensor);
  return *s;
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  const auto caps = compose::default_caps("nuscenes");
  c.categories["construction vehicle"] = {
      {{3.4, 1.8, 2.0}, {11.5, 2.6, 3.6}}, caps.at("construction vehicle"), 10};
  c.categories["motorcycle"] = {
      {{1.9, 0.69, 1.1}, {2.35, 0.95, 1.7}}, caps.at("motorcycle"), 10};
  c.categories["bicycle"] = {
      {{1.6, 0.42, 0.95}, {2.6, 0.7, 1.8}}, caps.at("bicycle"), 10};
  return c;
}

RunConfig RunConfig::lyft_defaults() {
  RunConfig c = defaults();
  c.categories.erase("construction vehicle");
  const auto caps = compose::default_caps("lyft");
  for (auto& [name, cat] : c.categories) cat.max_per_class = caps.at(name);
  return c;
}

json to_json(const RunConfig& c) {
  json cats = json::object();
  for (const auto& [name, cat] : c.categories) {
    cats[name] = {{"size_prior", prior_json(cat.size_prior)},
                  {"max_per_class", cat.max_per_class},
                  {"candidates_per_scene", cat.candidates_per_scene}};
  }
  const auto& r = c.region;
  json endpoint = {{"base_url", c.endpoint.base_url},
                   {"timeout_s", c.endpoint.timeout_s},
                   {"max_retries", c.endpoint.max_retries}};
  endpoint["auth_token"] =
      c.endpoint.auth_token ? json(*c.endpoint.auth_token) : json(nullptr);
  return {
      {"categories", cats},
      {"placement",
       {{"x_min", r.x_min}, {"x_max", r.x_max}, {"y_min", r.y_min},
        {"y_max", r.y_max}, {"z_ground", r.z_ground}, {"yaw_min", r.yaw_min},
        {"yaw_max", r.yaw_max}, {"free_z", r.free_z}, {"z_min", r.z_min},
        {"z_max", r.z_max}}},
      {"visibility",
       {{"min_inside_fraction", c.visibility.min_inside_fraction},
        {"min_side_px", c.visibility.min_side_px}}},
      {"max_placement_attempts", c.max_placement_attempts},
      {"lambda", c.lambda},
      {"p_n", c.p_n},
      {"sensor", c.sensor},
      {"run_seed", c.run_seed},
      {"band_px", c.band_px},
      {"tau_edge", c.tau_edge},
      {"crop_margin", c.crop_margin},
      {"marker_width", c.marker_width},
      {"intensity",
       {{"mode", c.intensity.constant ? "constant" : "simulate"},
        {"value", c.intensity.value},
        {"r_ref", c.intensity.r_ref},
        {"normal_k", c.intensity.normal_k}}},
      {"providers",
       {{"mode", c.provider_mode},
        {"endpoint", endpoint},
        {"stub",
         {{"preset", c.stub.preset},
          {"depth_scale_min", c.stub.depth_scale_min},
          {"depth_scale_max", c.stub.depth_scale_max}}}}},
      {"max_in_flight", c.max_in_flight},
      {"max_new_tokens", c.max_new_tokens},
      {"full_marginals", c.full_marginals},
      {"cross_scene", c.cross_scene},
  };
}

RunConfig config_from_json(const json& j) {
  try {
    RunConfig c = RunConfig::defaults();
    if (j.contains("dataset")) {
      const auto ds = j.at("dataset").get<std::string>();
      if (ds == "lyft") {
        c = RunConfig::lyft_defaults();
      } else if (ds != "nuscenes") {
        config_error("unknown dataset: " + ds);
      }
    }
    if (j.contains("categories")) {
      std::map<std::string, CategoryConfig> cats;
      for (const auto& [name, v] : j.at("categories").items()) {
        CategoryConfig cat;
        if (auto it = c.categories.find(name); it != c.categories.end()) cat = it->second;
        if (v.contains("size_prior")) cat.size_prior = prior_from(v.at("size_prior"));
        cat.max_per_class = v.value("max_per_class", cat.max_per_class);
        cat.candidates_per_scene =
            v.value("candidates_per_scene", cat.candidates_per_scene);
        cats[name] = cat;
      }
      c.categories = std::move(cats);
    }
    if (j.contains("placement")) {
      const auto& p = j.at("placement");
      auto& r = c.region;
      r.x_min = p.value("x_min", r.x_min);
      r.x_max = p.value("x_max", r.x_max);
      r.y_min = p.value("y_min", r.y_min);
      r.y_max = p.value("y_max", r.y_max);
      r.z_ground = p.value("z_ground", r.z_ground);
      r.yaw_min = p.value("yaw_min", r.yaw_min);
      r.yaw_max = p.value("yaw_max", r.yaw_max);
      r.free_z = p.value("free_z", r.free_z);
      r.z_min = p.value("z_min", r.z_min);
      r.z_max = p.value("z_max", r.z_max);
    }
    if (j.contains("visibility")) {
      const auto& v = j.at("visibility");
      c.visibility.min_inside_fraction =
          v.value("min_inside_fraction", c.visibility.min_inside_fraction);
      c.visibility.min_side_px = v.value("min_side_px", c.visibility.min_side_px);
    }
    c.max_placement_attempts =
        j.value("max_placement_attempts", c.max_placement_attempts);
    c.lambda = j.value("lambda", c.lambda);
    c.p_n = j.value("p_n", c.p_n);
    c.sensor = j.value("sensor", c.sensor);
    c.run_seed = j.value("run_seed", c.run_seed);
    c.band_px = j.value("band_px", c.band_px);
    c.tau_edge = j.value("tau_edge", c.tau_edge);
    c.crop_margin = j.value("crop_margin", c.crop_margin);
    c.marker_width = j.value("marker_width", c.marker_width);
    if (j.contains("intensity")) {
      const auto& i = j.at("intensity");
      const auto mode = i.value("mode", std::string("simulate"));
      if (mode != "simulate" && mode != "constant") {
        config_error("intensity mode must be simulate or constant");
      }
      c.intensity.constant = mode == "constant";
      c.intensity.value = i.value("value", c.intensity.value);
      c.intensity.r_ref = i.value("r_ref", c.intensity.r_ref);
      c.intensity.normal_k = i.value("normal_k", c.intensity.normal_k);
    }
    if (j.contains("providers")) {
      const auto& p = j.at("providers");
      c.provider_mode = p.value("mode", c.provider_mode);
      if (p.contains("endpoint")) {
        const auto& e = p.at("endpoint");
        c.endpoint.base_url = e.value("base_url", c.endpoint.base_url);
        c.endpoint.timeout_s = e.value("timeout_s", c.endpoint.timeout_s);
        c.endpoint.max_retries = e.value("max_retries", c.endpoint.max_retries);
        if (e.contains("auth_token") && !e.at("auth_token").is_null()) {
          c.endpoint.auth_token = e.at("auth_token").get<std::string>();
        }
      }
      if (p.contains("stub")) {
        const auto& s = p.at("stub");
        c.stub.preset = s.value("preset", c.stub.preset);
        c.stub.depth_scale_min = s.value("depth_scale_min", c.stub.depth_scale_min);
        c.stub.depth_scale_max = s.value("depth_scale_max", c.stub.depth_scale_max);
      }
    }
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
    c.full_marginals = j.value("full_marginals", c.full_marginals);
    c.cross_scene = j.value("cross_scene", c.cross_scene);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    config_error(std::string("run config: ") + e.what());
  }
}

RunConfig load_config(const fs::path& path) {
  try {
    return config_from_json(read_json_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(e.what());
  }
}

// ---------------------------------------------------------------------------
// Asset store

namespace {

json asset_meta(const compose::InstanceAsset& a) {
  return {{"category", a.category},
          {"subclass", a.subclass},
          {"left", a.left},
          {"top", a.top},
          {"box7", a.box.to_array()},
          {"source_scene", a.source_scene},
          {"center_range", a.center_range},
          {"point_count", a.cloud.size()},
          {"has_intensity", a.cloud.has_intensity()}};
}

struct AssetPayload {
  json meta;
  std::vector<std::uint8_t> cloud;
  std::vector<std::uint8_t> rgb;
  std::vector<std::uint8_t> mask;
};

AssetPayload payload(const compose::InstanceAsset& a) {
  a.validate();
  return {asset_meta(a), pointcloud::encode_cloud(a.cloud), image_io::encode_png(a.rgb),
          image_io::encode_mask_png(a.mask)};
}

std::string payload_id(const AssetPayload& p) {
  std::vector<std::uint8_t> all;
  const std::string meta = p.meta.dump();
  all.insert(all.end(), meta.begin(), meta.end());
  for (const auto* part : {&p.cloud, &p.rgb, &p.mask}) {
    const std::uint64_t n = part->size();
    for (int i = 0; i < 8; ++i) all.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    all.insert(all.end(), part->begin(), part->end());
  }
  return codec::sha256_hex(all);
}

}  // namespace

std::string asset_id(const compose::InstanceAsset& asset) {
  return payload_id(payload(asset));
}

std::string store_asset(const compose::InstanceAsset& asset, const fs::path& db_root) {
  const AssetPayload p = payload(asset);
  const std::string id = payload_id(p);
  const fs::path dir = db_root / id;
  if (fs::exists(dir / "asset.json")) return id;
  fs::create_directories(dir);
  image_io::write_file_atomic(dir / "cloud.bin", p.cloud);
  const json sidecar = {{"count", asset.cloud.size()},
                        {"frame", "sensor"},
                        {"sensor_spec_id", ""}};
  write_text_atomic(dir / "cloud.json", sidecar.dump(2) + "\n");
  image_io::write_file_atomic(dir / "rgb.png", p.rgb);
  image_io::write_file_atomic(dir / "mask.png", p.mask);
  json meta = p.meta;
  meta["id"] = id;
  // Written last: its presence marks a complete asset.
  write_text_atomic(dir / "asset.json", meta.dump(2) + "\n");
  return id;
}

compose::InstanceAsset load_asset(const fs::path& db_root, const std::string& id) {
  const fs::path dir = db_root / id;
  const json meta = read_json_file(dir / "asset.json");
  try {
    compose::InstanceAsset a;
    a.id = meta.at("id").get<std::string>();
    a.category = meta.at("category").get<std::string>();
    a.subclass = meta.at("subclass").get<std::string>();
    a.left = meta.at("left").get<int>();
    a.top = meta.at("top").get<int>();
    a.box = geometry::Box3D::from_array(meta.at("box7").get<std::array<double, 7>>());
    a.source_scene = meta.at("source_scene").get<std::string>();
    a.center_range = meta.at("center_range").get<double>();
    a.cloud = pointcloud::read_cloud(dir / "cloud.bin");
    if (!meta.value("has_intensity", true)) a.cloud.intensity.clear();
    a.rgb = image_io::read_png(dir / "rgb.png");
    a.mask = image_io::decode_mask_png(image_io::read_file(dir / "mask.png"));
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "asset " + id + ": " + e.what());
  }
}

std::vector<compose::InstanceAsset> load_assets(const fs::path& db_root) {
  std::vector<std::string> ids;
  if (fs::is_directory(db_root)) {
    for (const auto& e : fs::directory_iterator(db_root)) {
      if (e.is_directory() && fs::exists(e.path() / "asset.json")) {
        ids.push_back(e.path().filename().string());
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  std::vector<compose::InstanceAsset> out;
  for (const auto& id : ids) out.push_back(load_asset(db_root, id));
  return out;
}

// ---------------------------------------------------------------------------
// Candidate log

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kMissingAsset,
                  std::string("log write failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

class FileLock {
 public:
  explicit FileLock(int fd) : fd_(fd) {
    while (::flock(fd_, LOCK_EX) != 0 && errno == EINTR) {
    }
  }
  ~FileLock() { ::flock(fd_, LOCK_UN); }

 private:
  int fd_;
};

}  // namespace

LogWriter::LogWriter(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::kMissingAsset,
                "cannot open log " + path.string() + ": " + std::strerror(errno));
  }
  FileLock lock(fd_);
  struct stat st {};
  if (::fstat(fd_, &st) == 0 && st.st_size == 0) {
    write_all(fd_, analytics::log_header().dump() + "\n");
  }
}

LogWriter::~LogWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void LogWriter::append(const analytics::CandidateRecord& rec) {
  append_line(analytics::to_json(rec).dump());
}

void LogWriter::append_line(const std::string& line) {
  const std::string data = line + "\n";
  std::lock_guard<std::mutex> guard(mu_);
  FileLock lock(fd_);
  write_all(fd_, data);
}

void append_record(const fs::path& log, const analytics::CandidateRecord& rec) {
  LogWriter w(log);
  w.append(rec);
}

namespace {

// Complete lines only; a trailing fragment without newline is dropped.
std::vector<std::string> complete_lines(const fs::path& path) {
  std::vector<std::string> out;
  if (!fs::exists(path)) return out;
  const auto bytes = image_io::read_file(path);
  std::size_t start = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (bytes[i] != '\n') continue;
    if (i > start) out.emplace_back(bytes.begin() + start, bytes.begin() + i);
    start = i + 1;
  }
  return out;
}

}  // namespace

std::set<std::string> logged_ids(const fs::path& log) {
  std::set<std::string> ids;
  for (const auto& line : complete_lines(log)) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("candidate_id")) continue;
    ids.insert(j.at("candidate_id").get<std::string>());
  }
  return ids;
}

void canonicalize_log(const fs::path& log) {
  std::map<std::string, std::string> by_id;
  for (const auto& line : complete_lines(log)) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::kParseError, "corrupt log line in " + log.string());
    }
    if (!j.is_object() || !j.contains("candidate_id")) continue;
    by_id.emplace(j.at("candidate_id").get<std::string>(), line);
  }
  std::string text = analytics::log_header().dump() + "\n";
  for (const auto& [id, line] : by_id) text += line + "\n";
  write_text_atomic(log, text);
}

// ---------------------------------------------------------------------------
// Demo scenes

geometry::CameraIntrinsics demo_camera() {
  geometry::CameraIntrinsics c;
  c.width = 640;
  c.height = 360;
  c.fx = c.fy = 480.0;
  c.cx = 320.0;
  c.cy = 180.0;
  return c;
}

geometry::RigidTransform demo_sensor_to_camera() {
  // Camera looks along sensor +x with image x to the right (-y) and image y
  // down (-z); mounted 0.3 m below the LiDAR.
  geometry::RigidTransform t;
  t.rotation << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  const geometry::Vec3 camera_center(0.0, 0.0, -0.3);
  t.translation = -(t.rotation * camera_center);
  return t;
}

namespace {

bool ray_box(const geometry::Vec3& origin, const geometry::Vec3& dir,
             const geometry::Box3D& box, double& t_hit) {
  const geometry::Mat3 to_box = geometry::RigidTransform::rotation_z(-box.yaw).rotation;
  const geometry::Vec3 o = to_box * (origin - box.center);
  const geometry::Vec3 d = to_box * dir;
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double h = 0.5 * box.size[i];
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < -h || o[i] > h) return false;
      continue;
    }
    double a = (-h - o[i]) / d[i];
    double b = (h - o[i]) / d[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1 || t1 <= 0.0) return false;
  t_hit = t0 > 0.0 ? t0 : t1;
  return true;
}

}  // namespace

compose::SceneSample make_demo_scene(const std::string& scene_id, std::uint64_t seed,
                                     const pointcloud::SensorSpec& sensor) {
  constexpr double kGround = -1.84;
  compose::SceneSample s;
  s.scene_id = scene_id;
  s.camera = demo_camera();
  s.sensor_to_camera = demo_sensor_to_camera();
  s.sensor = sensor;
  RandomStream rng(seed, fnv1a64(scene_id));

  // Parked cars, pairwise non-overlapping.
  const int want = 2 + static_cast<int>(rng.below(3));
  for (int tries = 0; tries < 100 && static_cast<int>(s.boxes.size()) < want; ++tries) {
    geometry::Box3D b;
    b.size = geometry::Vec3(rng.uniform(4.2, 4.8), rng.uniform(1.8, 2.0),
                            rng.uniform(1.5, 1.7));
    b.center = geometry::Vec3(rng.uniform(8.0, 45.0), rng.uniform(-12.0, 12.0),
                              kGround + 0.5 * b.size.z());
    b.yaw = geometry::wrap_angle(rng.uniform(-0.3, 0.3) +
                                 (rng.below(2) ? std::numbers::pi : 0.0));
    const bool clash = std::any_of(s.boxes.begin(), s.boxes.end(), [&](const auto& o) {
      return compose::boxes_overlap(b, o);
    });
    if (clash) continue;
    s.boxes.push_back(b);
    s.box_categories.push_back("car");
  }

  // Image: sky gradient, textured road, cars as flat hulls far to near.
  const auto& cam = s.camera;
  s.image = ImageBuffer(cam.width, cam.height);
  const std::uint64_t tex = rng.next_u64();
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      if (y < cam.cy) {
        const int v = 150 + 80 * y / static_cast<int>(cam.cy);
        s.image.set(x, y, {static_cast<std::uint8_t>(v - 40), static_cast<std::uint8_t>(v - 10),
                           static_cast<std::uint8_t>(std::min(255, v + 20))});
      } else {
        const auto n = static_cast<int>(mix64(tex ^ (static_cast<std::uint64_t>(y) << 32 ^
                                                     static_cast<std::uint64_t>(x))) % 24);
        const auto g = static_cast<std::uint8_t>(90 + n);
        s.image.set(x, y, {g, g, static_cast<std::uint8_t>(g + 4)});
      }
    }
  }
  std::vector<std::size_t> order(s.boxes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.boxes[a].center.norm() > s.boxes[b].center.norm();
  });
  for (std::size_t i : order) {
    geometry::PixelMask mask;
    try {
      mask = geometry::box_to_mask(s.boxes[i], cam, s.sensor_to_camera);
    } catch (const Error&) {
      continue;
    }
    const Rgb color{static_cast<std::uint8_t>(60 + 40 * i), 30,
                    static_cast<std::uint8_t>(40 + 30 * i)};
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        if (mask.at(x, y)) s.image.set(x, y, color);
      }
    }
  }

  // LiDAR sweep: nearest hit among the ground plane and the cars.
  const int rows = sensor.rows();
  const int cols = sensor.cols();
  for (int r = 0; r < rows; ++r) {
    const double e = sensor.elevations[r];
    for (int c = 0; c < cols; ++c) {
      const double a = sensor.column_azimuth(c);
      const geometry::Vec3 dir(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a),
                               std::sin(e));
      double best = std::numeric_limits<double>::infinity();
      double intensity = 0.0;
      if (dir.z() < 0.0) {
        best = kGround / dir.z();
        const auto n = mix64(tex ^ (static_cast<std::uint64_t>(r) << 20) ^
                             static_cast<std::uint64_t>(c));
        intensity = 0.12 + 0.06 * unit_double(n);
      }
      for (const auto& b : s.boxes) {
        double t = 0.0;
        if (ray_box(geometry::Vec3::Zero(), dir, b, t) && t < best) {
          best = t;
          intensity = 0.6;
        }
      }
      if (!(best >= sensor.r_min && best <= sensor.r_max)) continue;
      const geometry::Vec3 p = best * dir;
      if (!pointcloud::sensor_cell(p, sensor)) continue;
      s.cloud.points.push_back(p);
      s.cloud.intensity.push_back(intensity);
    }
  }
  return s;
}

fs::path write_scene(const fs::path& dir, const compose::SceneSample& scene,
                     double ground_height) {
  fs::create_directories(dir / "data");
  SceneManifest m;
  m.scene_id = scene.scene_id;
  m.image_path = "data/" + scene.scene_id + ".png";
  m.cloud_path = "data/" + scene.scene_id + ".bin";
  m.camera = scene.camera;
  m.sensor_to_camera = scene.sensor_to_camera;
  m.sensor_spec_id = scene.sensor.id;
  m.ground_height = ground_height;
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    m.boxes.push_back({i < scene.box_categories.size() ? scene.box_categories[i] : "",
                       scene.boxes[i]});
  }
  image_io::write_png(dir / m.image_path, scene.image);
  pointcloud::write_cloud(dir / m.cloud_path, scene.cloud, "sensor", scene.sensor.id);
  const fs::path manifest = dir / (scene.scene_id + ".json");
  write_manifest(manifest, m);
  return manifest;
}

}  // namespace veria::dataset_io
