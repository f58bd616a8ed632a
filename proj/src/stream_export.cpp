// Copyright 2026 The coopsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coopsim/stream_export.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"
#include "json.hpp"

namespace coopsim::stream {

using nlohmann::json;

std::string_view ToString(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kPoints: return "points";
    case PayloadKind::kBoxes: return "boxes";
    case PayloadKind::kPose: return "pose";
  }
  return "?";
}

std::optional<PayloadKind> ParsePayloadKind(std::string_view name) {
  if (name == "points") return PayloadKind::kPoints;
  if (name == "boxes") return PayloadKind::kBoxes;
  if (name == "pose") return PayloadKind::kPose;
  return std::nullopt;
}

PayloadKind KindOf(const Payload& payload) {
  return static_cast<PayloadKind>(payload.index());
}

const StreamInfo* SceneManifest::Find(std::string_view path) const {
  for (const auto& s : streams) {
    if (s.path == path) return &s;
  }
  return nullptr;
}

std::string DefaultColor(std::string_view path) {
  auto leaf = [&](std::string_view name) { return path.ends_with(name); };
  if (path.starts_with("/vehicle/")) {
    if (leaf("/lidar")) return "#6baed6";
    if (leaf("/tracks")) return "#08519c";
    return "#1f77b4";
  }
  if (path.starts_with("/roadside/")) {
    if (leaf("/lidar")) return "#74c476";
    if (leaf("/tracks")) return "#006d2c";
    return "#2ca02c";
  }
  if (path.starts_with("/fused/")) {
    if (leaf("/tracks")) return "#d94801";
    return "#fd8d3c";
  }
  return "#7f7f7f";
}

FrameBuilder::FrameBuilder(int frame, double timestamp) {
  bundle_.frame = frame;
  bundle_.timestamp = timestamp;
}

void FrameBuilder::Insert(const std::string& path, Payload payload) {
  if (path.empty() || path.front() != '/') {
    throw Error("stream path '" + path + "' must start with '/'");
  }
  auto [it, inserted] = bundle_.streams.try_emplace(path);
  if (!inserted) {
    throw Error(fmt::format("duplicate stream path '{}' in frame {}", path, bundle_.frame));
  }
  it->second.color = DefaultColor(path);
  it->second.payload = std::move(payload);
}

namespace {

double RoundMm(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

FrameBuilder& FrameBuilder::AddPoints(const std::string& path, const PointCloud& cloud,
                                      const Pose& sensor_to_global, int decimation) {
  if (decimation < 1) throw Error("point decimation must be >= 1");
  PointsPayload p;
  p.xyz.reserve(3 * (cloud.points.size() / decimation + 1));
  for (std::size_t i = 0; i < cloud.points.size(); i += decimation) {
    const auto& pt = cloud.points[i];
    const Vec3 g = sensor_to_global.Apply(Vec3(pt.x, pt.y, pt.z));
    p.xyz.push_back(RoundMm(g.x()));
    p.xyz.push_back(RoundMm(g.y()));
    p.xyz.push_back(RoundMm(g.z()));
  }
  Insert(path, std::move(p));
  return *this;
}

FrameBuilder& FrameBuilder::AddBoxes(const std::string& path, std::vector<BoxItem> boxes) {
  Insert(path, BoxesPayload{std::move(boxes)});
  return *this;
}

FrameBuilder& FrameBuilder::AddPose(const std::string& path, const Pose& pose) {
  Insert(path, PosePayload{pose});
  return *this;
}

BoxItem DetectionItem(const Detection& det) {
  return {"", std::string(ToString(det.cls)), det.box, det.score, {}};
}

BoxItem TrackItem(const TrackedObject& track, int future_steps, double dt) {
  BoxItem item{std::to_string(track.id), std::string(ToString(track.cls)), track.box,
               track.score, {}};
  for (int k = 1; k <= future_steps; ++k) {
    item.future.push_back(track.box.center + track.velocity * (k * dt));
  }
  return item;
}

BoxItem TruthItem(const TruthBox& truth) {
  return {truth.id, std::string(ToString(truth.cls)), truth.box, 1.0, {}};
}

FrameBundle PackFrame(const FrameArtifacts& a, const PackOptions& options) {
  FrameBuilder b(a.frame, a.timestamp);
  if (a.vehicle_cloud) {
    b.AddPoints("/vehicle/lidar", a.vehicle_cloud->first, a.vehicle_cloud->second,
                options.point_decimation);
  }
  if (a.roadside_cloud) {
    b.AddPoints("/roadside/lidar", a.roadside_cloud->first, a.roadside_cloud->second,
                options.point_decimation);
  }
  if (a.vehicle_pose) b.AddPose("/vehicle/pose", *a.vehicle_pose);
  auto dets = [&](const std::string& path, const std::optional<std::vector<Detection>>& d) {
    if (!d) return;
    std::vector<BoxItem> items;
    for (const auto& x : *d) items.push_back(DetectionItem(x));
    b.AddBoxes(path, std::move(items));
  };
  auto tracks = [&](const std::string& path,
                    const std::optional<std::vector<TrackedObject>>& t) {
    if (!t) return;
    std::vector<BoxItem> items;
    for (const auto& x : *t) items.push_back(TrackItem(x, options.future_steps, options.future_dt));
    b.AddBoxes(path, std::move(items));
  };
  dets("/vehicle/detections", a.vehicle_detections);
  dets("/roadside/detections", a.roadside_detections);
  dets("/fused/detections", a.fused_detections);
  tracks("/vehicle/tracks", a.vehicle_tracks);
  tracks("/fused/tracks", a.fused_tracks);
  if (a.truth) {
    std::vector<BoxItem> items;
    for (const auto& t : *a.truth) items.push_back(TruthItem(t));
    b.AddBoxes("/ground_truth/boxes", std::move(items));
  }
  return b.Build();
}

SceneManifest BuildManifest(const std::string& scenario, double frame_dt,
                            const std::vector<FrameBundle>& bundles,
                            std::vector<std::vector<Vec3>> lanes) {
  SceneManifest m;
  m.scenario = scenario;
  m.frame_count = static_cast<int>(bundles.size());
  m.frame_dt = frame_dt;
  m.lanes = std::move(lanes);
  std::map<std::string, StreamInfo> catalog;
  for (const auto& b : bundles) {
    for (const auto& [path, data] : b.streams) {
      catalog.try_emplace(path, StreamInfo{path, KindOf(data.payload), data.color, true});
    }
  }
  for (auto& [path, info] : catalog) m.streams.push_back(std::move(info));
  return m;
}

namespace {

json Vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 ToVec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json PoseJson(const Pose& p) {
  return {{"position", Vec(p.position)}, {"roll", p.roll}, {"pitch", p.pitch}, {"yaw", p.yaw}};
}

Pose PoseFrom(const json& j) {
  Pose p;
  p.position = ToVec(j.at("position"));
  p.roll = j.at("roll").get<double>();
  p.pitch = j.at("pitch").get<double>();
  p.yaw = j.at("yaw").get<double>();
  return p;
}

json BoxJson(const BoxItem& b) {
  json j = {{"id", b.id},
            {"class", b.cls},
            {"center", Vec(b.box.center)},
            {"size", json::array({b.box.length, b.box.width, b.box.height})},
            {"yaw", b.box.yaw},
            {"score", b.score}};
  if (!b.future.empty()) {
    json f = json::array();
    for (const auto& v : b.future) f.push_back(Vec(v));
    j["future"] = std::move(f);
  }
  return j;
}

BoxItem BoxFrom(const json& j) {
  BoxItem b;
  b.id = j.at("id").get<std::string>();
  b.cls = j.at("class").get<std::string>();
  b.box.center = ToVec(j.at("center"));
  const Vec3 size = ToVec(j.at("size"));
  b.box.length = size.x();
  b.box.width = size.y();
  b.box.height = size.z();
  b.box.yaw = j.at("yaw").get<double>();
  b.score = j.at("score").get<double>();
  if (j.contains("future")) {
    for (const auto& v : j["future"]) b.future.push_back(ToVec(v));
  }
  return b;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

std::string SerializeManifest(const SceneManifest& m) {
  json streams = json::array();
  for (const auto& s : m.streams) {
    streams.push_back({{"path", s.path},
                       {"kind", std::string(ToString(s.kind))},
                       {"color", s.color},
                       {"visible", s.visible}});
  }
  json lanes = json::array();
  for (const auto& lane : m.lanes) {
    json l = json::array();
    for (const auto& v : lane) l.push_back(Vec(v));
    lanes.push_back(std::move(l));
  }
  const json j = {{"format", "coopsim-scene"},
                  {"version", 1},
                  {"scenario", m.scenario},
                  {"frame_count", m.frame_count},
                  {"frame_dt", m.frame_dt},
                  {"streams", std::move(streams)},
                  {"lanes", std::move(lanes)}};
  return j.dump(1) + "\n";
}

std::string SerializeFrame(const FrameBundle& b) {
  json streams = json::object();
  for (const auto& [path, data] : b.streams) {
    json s = {{"kind", std::string(ToString(KindOf(data.payload)))}, {"color", data.color}};
    if (const auto* p = std::get_if<PointsPayload>(&data.payload)) {
      s["points"] = p->xyz;
    } else if (const auto* bx = std::get_if<BoxesPayload>(&data.payload)) {
      json arr = json::array();
      for (const auto& item : bx->boxes) arr.push_back(BoxJson(item));
      s["boxes"] = std::move(arr);
    } else {
      s["pose"] = PoseJson(std::get<PosePayload>(data.payload).pose);
    }
    streams[path] = std::move(s);
  }
  const json j = {{"frame", b.frame}, {"timestamp", b.timestamp}, {"streams", std::move(streams)}};
  return j.dump() + "\n";
}

SceneManifest ParseManifest(std::string_view text) {
  try {
    const json j = json::parse(text);
    SceneManifest m;
    m.scenario = j.at("scenario").get<std::string>();
    m.frame_count = j.at("frame_count").get<int>();
    m.frame_dt = j.at("frame_dt").get<double>();
    for (const auto& s : j.at("streams")) {
      const auto kind = ParsePayloadKind(s.at("kind").get<std::string>());
      if (!kind) throw Error("unknown stream kind " + s.at("kind").dump());
      m.streams.push_back({s.at("path").get<std::string>(), *kind,
                           s.at("color").get<std::string>(), s.at("visible").get<bool>()});
    }
    for (const auto& lane : j.at("lanes")) {
      std::vector<Vec3> l;
      for (const auto& v : lane) l.push_back(ToVec(v));
      m.lanes.push_back(std::move(l));
    }
    if (m.frame_count < 0) throw Error("negative frame_count");
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
}

FrameBundle ParseFrame(std::string_view text) {
  try {
    const json j = json::parse(text);
    FrameBundle b;
    b.frame = j.at("frame").get<int>();
    b.timestamp = j.at("timestamp").get<double>();
    for (const auto& [path, s] : j.at("streams").items()) {
      const auto kind = ParsePayloadKind(s.at("kind").get<std::string>());
      if (!kind) throw Error("unknown kind for stream " + path);
      StreamData data;
      data.color = s.at("color").get<std::string>();
      switch (*kind) {
        case PayloadKind::kPoints:
          data.payload = PointsPayload{s.at("points").get<std::vector<double>>()};
          break;
        case PayloadKind::kBoxes: {
          BoxesPayload bx;
          for (const auto& item : s.at("boxes")) bx.boxes.push_back(BoxFrom(item));
          data.payload = std::move(bx);
          break;
        }
        case PayloadKind::kPose:
          data.payload = PosePayload{PoseFrom(s.at("pose"))};
          break;
      }
      b.streams.emplace(path, std::move(data));
    }
    return b;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed frame: ") + e.what());
  }
}

void ValidateScene(const SceneManifest& m, const std::vector<FrameBundle>& bundles) {
  if (static_cast<int>(bundles.size()) != m.frame_count) {
    throw Error(fmt::format("manifest frame_count {} but {} frames", m.frame_count,
                            bundles.size()));
  }
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const auto& b = bundles[i];
    if (b.frame != static_cast<int>(i)) {
      throw Error(fmt::format("frame file {} holds frame {}", i, b.frame));
    }
    if (i > 0 && !(b.timestamp > bundles[i - 1].timestamp)) {
      throw Error(fmt::format("timestamp of frame {} is not increasing", i));
    }
    for (const auto& [path, data] : b.streams) {
      const StreamInfo* info = m.Find(path);
      if (!info) {
        throw Error(fmt::format("stream '{}' in frame {} is missing from the manifest", path,
                                b.frame));
      }
      if (info->kind != KindOf(data.payload)) {
        throw Error(fmt::format("stream '{}' in frame {} has kind {} but manifest says {}", path,
                                b.frame, ToString(KindOf(data.payload)), ToString(info->kind)));
      }
    }
  }
}

std::string FrameFileName(int frame) { return fmt::format("{:06d}.json", frame); }

void WriteScene(const std::vector<FrameBundle>& bundles, const SceneManifest& manifest,
                const std::filesystem::path& directory) {
  ValidateScene(manifest, bundles);
  std::error_code ec;
  std::filesystem::create_directories(directory / "frames", ec);
  if (ec) throw Error("cannot create " + (directory / "frames").string() + ": " + ec.message());
  WriteFile(directory / "manifest.json", SerializeManifest(manifest));
  for (const auto& b : bundles) {
    WriteFile(directory / "frames" / FrameFileName(b.frame), SerializeFrame(b));
  }
}

namespace {

struct RawScene {
  Scene scene;
  std::string manifest_text;
  std::vector<std::string> frame_texts;
};

RawScene LoadRaw(const std::filesystem::path& directory) {
  RawScene raw;
  const auto manifest_path = directory / "manifest.json";
  if (!std::filesystem::is_regular_file(manifest_path)) {
    throw Error("no manifest.json in " + directory.string());
  }
  raw.manifest_text = ReadFile(manifest_path);
  raw.scene.manifest = ParseManifest(raw.manifest_text);
  for (int i = 0; i < raw.scene.manifest.frame_count; ++i) {
    const auto path = directory / "frames" / FrameFileName(i);
    if (!std::filesystem::is_regular_file(path)) {
      throw Error(fmt::format("missing frame file frames/{} for frame {}", FrameFileName(i), i));
    }
    raw.frame_texts.push_back(ReadFile(path));
    try {
      raw.scene.bundles.push_back(ParseFrame(raw.frame_texts.back()));
    } catch (const Error& e) {
      throw Error(fmt::format("frame {}: {}", i, e.what()));
    }
  }
  ValidateScene(raw.scene.manifest, raw.scene.bundles);
  return raw;
}

}  // namespace

Scene ReadScene(const std::filesystem::path& directory) {
  return LoadRaw(directory).scene;
}

struct SceneServer::Impl {
  RawScene raw;
  httplib::Server server;
  std::thread thread;
};

SceneServer::SceneServer(const std::filesystem::path& directory)
    : impl_(std::make_unique<Impl>()) {
  impl_->raw = LoadRaw(directory);
  auto& server = impl_->server;
  // httplib enables SO_REUSEPORT by default, which lets a second server
  // silently share a busy port.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, OPTIONS"},
                              {"Access-Control-Allow-Headers", "*"}});
  const Impl* impl = impl_.get();
  server.Get("/manifest", [impl](const httplib::Request&, httplib::Response& res) {
    res.set_content(impl->raw.manifest_text, "application/json");
  });
  server.Get(R"(/frames/(\d+))", [impl](const httplib::Request& req, httplib::Response& res) {
    const std::string digits = req.matches[1];
    const auto& frames = impl->raw.frame_texts;
    if (digits.size() > 9 || std::stoul(digits) >= frames.size()) {
      res.status = 404;
      res.set_content(R"({"error":"frame out of range"})", "application/json");
      return;
    }
    res.set_content(frames[std::stoul(digits)], "application/json");
  });
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
}

SceneServer::~SceneServer() { Stop(); }

int SceneServer::frame_count() const { return impl_->raw.scene.manifest.frame_count; }

void SceneServer::Start(const std::string& host, int port) {
  if (impl_->thread.joinable()) throw Error("server already running");
  auto& server = impl_->server;
  if (port == 0) {
    port_ = server.bind_to_any_port(host);
    if (port_ <= 0) throw Error("cannot bind " + host);
  } else {
    if (!server.bind_to_port(host, port)) {
      throw Error(fmt::format("cannot bind {}:{} (port busy?)", host, port));
    }
    port_ = port;
  }
  impl_->thread = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
}

void SceneServer::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace coopsim::stream
