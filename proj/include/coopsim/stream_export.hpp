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

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coopsim/evaluation.hpp"
#include "coopsim/geometry.hpp"
#include "coopsim/lidar_sim.hpp"
#include "coopsim/perception.hpp"
#include "coopsim/tracking.hpp"

namespace coopsim::stream {

enum class PayloadKind { kPoints, kBoxes, kPose };

std::string_view ToString(PayloadKind kind);
std::optional<PayloadKind> ParsePayloadKind(std::string_view name);

/// Global-frame xyz interleaved, rounded to millimetres.
struct PointsPayload {
  std::vector<double> xyz;
  bool operator==(const PointsPayload&) const = default;
};

struct BoxItem {
  std::string id;  ///< empty for untracked detections
  std::string cls;
  Box3D box;
  double score = 1.0;
  std::vector<Vec3> future;  ///< CV-extrapolated centers, tracks only
  bool operator==(const BoxItem&) const = default;
};

struct BoxesPayload {
  std::vector<BoxItem> boxes;
  bool operator==(const BoxesPayload&) const = default;
};

struct PosePayload {
  Pose pose;
  bool operator==(const PosePayload&) const = default;
};

using Payload = std::variant<PointsPayload, BoxesPayload, PosePayload>;

PayloadKind KindOf(const Payload& payload);

struct StreamData {
  std::string color;
  Payload payload;
  bool operator==(const StreamData&) const = default;
};

struct FrameBundle {
  int frame = 0;
  double timestamp = 0.0;
  std::map<std::string, StreamData> streams;
  bool operator==(const FrameBundle&) const = default;
};

struct StreamInfo {
  std::string path;
  PayloadKind kind = PayloadKind::kBoxes;
  std::string color;
  bool visible = true;
  bool operator==(const StreamInfo&) const = default;
};

struct SceneManifest {
  std::string scenario;
  int frame_count = 0;
  double frame_dt = 0.1;
  std::vector<StreamInfo> streams;  ///< sorted by path
  std::vector<std::vector<Vec3>> lanes;
  bool operator==(const SceneManifest&) const = default;

  const StreamInfo* Find(std::string_view path) const;
};

/// Display color for a stream path: vehicle blue, roadside green, fused
/// orange, ground truth gray.
std::string DefaultColor(std::string_view path);

/// Assembles one bundle; every Add* throws on a duplicate path.
class FrameBuilder {
 public:
  FrameBuilder(int frame, double timestamp);

  FrameBuilder& AddPoints(const std::string& path, const PointCloud& cloud,
                          const Pose& sensor_to_global, int decimation = 1);
  FrameBuilder& AddBoxes(const std::string& path, std::vector<BoxItem> boxes);
  FrameBuilder& AddPose(const std::string& path, const Pose& pose);

  FrameBundle Build() const { return bundle_; }

 private:
  void Insert(const std::string& path, Payload payload);
  FrameBundle bundle_;
};

BoxItem DetectionItem(const Detection& det);
BoxItem TrackItem(const TrackedObject& track, int future_steps, double dt);
BoxItem TruthItem(const TruthBox& truth);

struct PackOptions {
  int point_decimation = 1;
  int future_steps = 10;
  double future_dt = 0.1;
};

/// Everything known about one synchronized frame. Clouds are in their sensor
/// frame and come with the sensor-to-global pose; boxes are global.
struct FrameArtifacts {
  int frame = 0;
  double timestamp = 0.0;
  std::optional<Pose> vehicle_pose;
  std::optional<std::pair<PointCloud, Pose>> vehicle_cloud;
  std::optional<std::pair<PointCloud, Pose>> roadside_cloud;
  std::optional<std::vector<Detection>> vehicle_detections;
  std::optional<std::vector<Detection>> roadside_detections;
  std::optional<std::vector<Detection>> fused_detections;
  std::optional<std::vector<TrackedObject>> vehicle_tracks;
  std::optional<std::vector<TrackedObject>> fused_tracks;
  std::optional<std::vector<TruthBox>> truth;
};

FrameBundle PackFrame(const FrameArtifacts& artifacts, const PackOptions& options = {});

/// Catalog built from the union of stream paths across bundles.
SceneManifest BuildManifest(const std::string& scenario, double frame_dt,
                            const std::vector<FrameBundle>& bundles,
                            std::vector<std::vector<Vec3>> lanes = {});

std::string SerializeManifest(const SceneManifest& manifest);
std::string SerializeFrame(const FrameBundle& bundle);
SceneManifest ParseManifest(std::string_view text);
FrameBundle ParseFrame(std::string_view text);

/// Checks frame numbering, increasing timestamps and catalog coverage.
void ValidateScene(const SceneManifest& manifest, const std::vector<FrameBundle>& bundles);

std::string FrameFileName(int frame);

void WriteScene(const std::vector<FrameBundle>& bundles, const SceneManifest& manifest,
                const std::filesystem::path& directory);

struct Scene {
  SceneManifest manifest;
  std::vector<FrameBundle> bundles;
};

Scene ReadScene(const std::filesystem::path& directory);

/// Read-only HTTP view of a scene directory. The scene is loaded and
/// validated in the constructor, so a malformed scene fails before binding.
class SceneServer {
 public:
  explicit SceneServer(const std::filesystem::path& directory);
  ~SceneServer();
  SceneServer(const SceneServer&) = delete;
  SceneServer& operator=(const SceneServer&) = delete;

  /// Binds and starts serving on a background thread; port 0 picks a free
  /// port. Throws if the port cannot be bound.
  void Start(const std::string& host, int port);
  void Stop();
  int port() const { return port_; }
  int frame_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace coopsim::stream
