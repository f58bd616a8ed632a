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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coopsim/geometry.hpp"
#include "coopsim/lidar_sim.hpp"
#include "coopsim/world.hpp"

namespace coopsim {

/// Raised by LoadScenario; the message names the offending field or rule.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class RoadKind { kStraight, kCurve, kIntersection };
enum class Weather { kSunny, kCloudy, kFoggy, kRainy };

std::string_view ToString(RoadKind kind);
std::string_view ToString(Weather weather);

struct ConstantMotion {
  bool operator==(const ConstantMotion&) const = default;
};

/// Constant speed along the initial heading, in the ground plane.
struct LinearMotion {
  double speed = 0.0;
  bool operator==(const LinearMotion&) const = default;
};

struct Waypoint {
  double time = 0.0;
  Pose pose;
  bool operator==(const Waypoint&) const = default;
};

/// Piecewise-linear position, yaw along the shortest arc.
struct WaypointMotion {
  std::vector<Waypoint> points;
  bool operator==(const WaypointMotion&) const = default;
};

using MotionScript = std::variant<ConstantMotion, LinearMotion, WaypointMotion>;

struct Dims {
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  bool operator==(const Dims&) const = default;
};

struct ActorSpec {
  std::string id;
  ActorKind kind = ActorKind::kCar;
  Dims dims;
  Pose initial_pose;  ///< pose of the box center
  MotionScript motion = ConstantMotion{};
  bool is_ego = false;
};

enum class SensorKind { kLidar };

struct SensorSpec {
  std::string id;
  SensorKind kind = SensorKind::kLidar;
  std::string parent = "world";  ///< actor id or "world"
  Pose mount;                    ///< relative to the parent
  LidarParams lidar;
};

struct RoadSpec {
  RoadKind kind = RoadKind::kStraight;
  double lane_width = 3.5;
  double length = 120.0;
  double radius = 40.0;  ///< curve roads only
};

struct ScenarioConfig {
  std::string name = "scenario";
  RoadSpec road;
  Weather weather = Weather::kSunny;
  int frame_count = 1;
  double frame_dt = 0.1;
  GeoOrigin geo_origin;
  std::vector<ActorSpec> actors;
  std::vector<SensorSpec> sensors;
  std::uint64_t seed = 0;

  const ActorSpec& Ego() const;
  const ActorSpec* FindActor(std::string_view id) const;
  const SensorSpec* FindSensor(std::string_view id) const;
  /// Roadside sensors hang off "world" or a static actor.
  bool IsRoadsideSensor(const SensorSpec& sensor) const;
};

/// Parses and validates a YAML scenario document.
ScenarioConfig LoadScenario(std::string_view text);
ScenarioConfig LoadScenarioFile(const std::filesystem::path& path);

/// Re-checks every config invariant; throws ConfigError naming the rule.
void ValidateScenario(const ScenarioConfig& config);

/// Pose of `actor_id` at t = frame_index * frame_dt.
Pose ActorPose(const ScenarioConfig& config, std::string_view actor_id,
               int frame_index);
Pose ActorPoseAt(const ActorSpec& actor, double t);

/// Global pose of a sensor at `frame_index`.
Pose SensorPose(const ScenarioConfig& config, const SensorSpec& sensor,
                int frame_index);

WorldSnapshot StepWorld(const ScenarioConfig& config, int frame_index);

/// Lane center/edge polylines in the global frame, for drawing.
std::vector<std::vector<Vec3>> LanePolylines(const RoadSpec& road);

}  // namespace coopsim
