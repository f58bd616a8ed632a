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

#include "coopsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace coopsim {

std::string_view ToString(RoadKind kind) {
  switch (kind) {
    case RoadKind::kStraight: return "straight";
    case RoadKind::kCurve: return "curve";
    case RoadKind::kIntersection: return "intersection";
  }
  return "unknown";
}

std::string_view ToString(Weather weather) {
  switch (weather) {
    case Weather::kSunny: return "sunny";
    case Weather::kCloudy: return "cloudy";
    case Weather::kFoggy: return "foggy";
    case Weather::kRainy: return "rainy";
  }
  return "unknown";
}

const ActorSpec& ScenarioConfig::Ego() const {
  for (const auto& a : actors) {
    if (a.is_ego) return a;
  }
  throw ConfigError("scenario has no ego actor");
}

const ActorSpec* ScenarioConfig::FindActor(std::string_view id) const {
  for (const auto& a : actors) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const SensorSpec* ScenarioConfig::FindSensor(std::string_view id) const {
  for (const auto& s : sensors) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

bool ScenarioConfig::IsRoadsideSensor(const SensorSpec& sensor) const {
  if (sensor.parent == "world") return true;
  const ActorSpec* parent = FindActor(sensor.parent);
  return parent != nullptr && IsStaticKind(parent->kind);
}

namespace {

// YAML decoding helpers. `path` is the dotted field name used in messages.

[[noreturn]] void Fail(const YAML::Node& node, const std::string& path,
                       const std::string& what) {
  std::ostringstream msg;
  msg << "field '" << path << "'";
  if (node.IsDefined() && node.Mark().line >= 0) {
    msg << " (line " << node.Mark().line + 1 << ")";
  }
  msg << ": " << what;
  throw ConfigError(msg.str());
}

void CheckKeys(const YAML::Node& node, const std::string& path,
               std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) Fail(node, path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      Fail(kv.first, path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

std::string Join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

YAML::Node Required(const YAML::Node& parent, const std::string& path,
                    const char* key) {
  const YAML::Node n = parent[key];
  if (!n.IsDefined() || n.IsNull()) {
    Fail(parent, Join(path, key), "missing required field");
  }
  return n;
}

template <typename T>
T As(const YAML::Node& node, const std::string& path, const char* type_name) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    Fail(node, path, std::string("expected ") + type_name);
  }
}

double AsDouble(const YAML::Node& n, const std::string& path) {
  return As<double>(n, path, "a number");
}

double OptDouble(const YAML::Node& parent, const std::string& path,
                 const char* key, double fallback) {
  const YAML::Node n = parent[key];
  if (!n.IsDefined() || n.IsNull()) return fallback;
  return AsDouble(n, Join(path, key));
}

std::pair<double, double> AsRange(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence() || n.size() != 2) {
    Fail(n, path, "expected a two-element list [min, max]");
  }
  return {AsDouble(n[0], path + "[0]"), AsDouble(n[1], path + "[1]")};
}

Pose ParsePose(const YAML::Node& n, const std::string& path) {
  CheckKeys(n, path, {"position", "roll", "pitch", "yaw"});
  Pose p;
  if (const YAML::Node pos = n["position"]; pos.IsDefined()) {
    if (!pos.IsSequence() || pos.size() != 3) {
      Fail(pos, path + ".position", "expected a three-element list [x, y, z]");
    }
    for (int i = 0; i < 3; ++i) {
      p.position[i] = AsDouble(pos[i], path + ".position[" + std::to_string(i) + "]");
    }
  }
  p.roll = NormalizeAngle(OptDouble(n, path, "roll", 0.0));
  p.pitch = NormalizeAngle(OptDouble(n, path, "pitch", 0.0));
  p.yaw = NormalizeAngle(OptDouble(n, path, "yaw", 0.0));
  return p;
}

MotionScript ParseMotion(const YAML::Node& n, const std::string& path) {
  if (!n.IsDefined() || n.IsNull()) return ConstantMotion{};
  if (!n.IsMap()) Fail(n, path, "expected a mapping");
  const auto type = As<std::string>(Required(n, path, "type"), path + ".type",
                                    "a string");
  if (type == "constant") {
    CheckKeys(n, path, {"type"});
    return ConstantMotion{};
  }
  if (type == "linear") {
    CheckKeys(n, path, {"type", "speed"});
    return LinearMotion{AsDouble(Required(n, path, "speed"), path + ".speed")};
  }
  if (type == "waypoints") {
    CheckKeys(n, path, {"type", "points"});
    const YAML::Node pts = Required(n, path, "points");
    if (!pts.IsSequence() || pts.size() == 0) {
      Fail(pts, path + ".points", "expected a non-empty list");
    }
    WaypointMotion w;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string p = path + ".points[" + std::to_string(i) + "]";
      CheckKeys(pts[i], p, {"time", "pose"});
      Waypoint wp;
      wp.time = AsDouble(Required(pts[i], p, "time"), p + ".time");
      wp.pose = ParsePose(Required(pts[i], p, "pose"), p + ".pose");
      w.points.push_back(wp);
    }
    return w;
  }
  Fail(n["type"], path + ".type",
       "unknown motion type '" + type + "' (constant, linear, waypoints)");
}

ActorSpec ParseActor(const YAML::Node& n, const std::string& path) {
  CheckKeys(n, path, {"id", "kind", "dims", "initial_pose", "motion", "is_ego"});
  ActorSpec a;
  a.id = As<std::string>(Required(n, path, "id"), path + ".id", "a string");
  const YAML::Node kind = Required(n, path, "kind");
  try {
    a.kind = ParseActorKind(As<std::string>(kind, path + ".kind", "a string"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    Fail(kind, path + ".kind", e.what());
  }
  const YAML::Node dims = Required(n, path, "dims");
  CheckKeys(dims, path + ".dims", {"length", "width", "height"});
  a.dims.length = AsDouble(Required(dims, path + ".dims", "length"), path + ".dims.length");
  a.dims.width = AsDouble(Required(dims, path + ".dims", "width"), path + ".dims.width");
  a.dims.height = AsDouble(Required(dims, path + ".dims", "height"), path + ".dims.height");
  if (const YAML::Node ip = n["initial_pose"]; ip.IsDefined()) {
    a.initial_pose = ParsePose(ip, path + ".initial_pose");
  }
  a.motion = ParseMotion(n["motion"], path + ".motion");
  if (const YAML::Node e = n["is_ego"]; e.IsDefined()) {
    a.is_ego = As<bool>(e, path + ".is_ego", "a boolean");
  }
  return a;
}

LidarParams ParseLidar(const YAML::Node& n, const std::string& path,
                       LidarParams p) {
  if (!n.IsDefined() || n.IsNull()) return p;
  CheckKeys(n, path, {"channels", "vertical_fov", "azimuth_fov", "azimuth_step",
                      "max_range", "range_noise_sigma", "dropout_prob"});
  if (const YAML::Node c = n["channels"]; c.IsDefined()) {
    p.channels = As<int>(c, path + ".channels", "an integer");
  }
  if (const YAML::Node v = n["vertical_fov"]; v.IsDefined()) {
    std::tie(p.vertical_min_deg, p.vertical_max_deg) = AsRange(v, path + ".vertical_fov");
  }
  if (const YAML::Node v = n["azimuth_fov"]; v.IsDefined()) {
    std::tie(p.azimuth_min_deg, p.azimuth_max_deg) = AsRange(v, path + ".azimuth_fov");
  }
  p.azimuth_step_deg = OptDouble(n, path, "azimuth_step", p.azimuth_step_deg);
  p.max_range = OptDouble(n, path, "max_range", p.max_range);
  p.range_noise_sigma = OptDouble(n, path, "range_noise_sigma", p.range_noise_sigma);
  p.dropout_prob = OptDouble(n, path, "dropout_prob", p.dropout_prob);
  try {
    ValidateLidarParams(p);
  } catch (const Error& e) {
    Fail(n, path, e.what());
  }
  return p;
}

template <typename Enum>
Enum ParseEnum(const YAML::Node& n, const std::string& path,
               std::initializer_list<Enum> values) {
  const auto s = As<std::string>(n, path, "a string");
  for (Enum v : values) {
    if (ToString(v) == s) return v;
  }
  std::string allowed;
  for (Enum v : values) {
    if (!allowed.empty()) allowed += ", ";
    allowed += ToString(v);
  }
  Fail(n, path, "unknown value '" + s + "' (expected one of: " + allowed + ")");
}

}  // namespace

void ValidateScenario(const ScenarioConfig& c) {
  if (!(c.frame_dt > 0.0)) throw ConfigError("frame_dt must be > 0");
  if (c.frame_count < 1) throw ConfigError("frame_count must be >= 1");
  if (!(std::abs(c.geo_origin.lat0) < 90.0)) {
    throw ConfigError("geo_origin.lat0 must satisfy |lat0| < 90");
  }
  int egos = 0;
  std::set<std::string> ids;
  for (const auto& a : c.actors) {
    if (!ids.insert(a.id).second) {
      throw ConfigError("duplicate actor id '" + a.id + "'");
    }
    if (a.id == "world") throw ConfigError("actor id 'world' is reserved");
    if (a.is_ego) ++egos;
    if (!(a.dims.length > 0.0 && a.dims.width > 0.0 && a.dims.height > 0.0)) {
      throw ConfigError("actor '" + a.id + "' dims must be strictly positive");
    }
    if (IsStaticKind(a.kind) && !std::holds_alternative<ConstantMotion>(a.motion)) {
      throw ConfigError("static actor '" + a.id + "' (" +
                        std::string(ToString(a.kind)) +
                        ") must have constant motion");
    }
    if (const auto* w = std::get_if<WaypointMotion>(&a.motion)) {
      for (std::size_t i = 1; i < w->points.size(); ++i) {
        if (!(w->points[i].time > w->points[i - 1].time)) {
          throw ConfigError("actor '" + a.id +
                            "' waypoint times must be strictly increasing");
        }
      }
      const double end = c.frame_count * c.frame_dt;
      if (w->points.empty() || w->points.front().time > 0.0 ||
          w->points.back().time < end - 1e-9) {
        throw ConfigError("actor '" + a.id + "' waypoints must cover [0, " +
                          std::to_string(end) + "] s");
      }
    }
  }
  if (egos == 0) throw ConfigError("no ego actor");
  if (egos > 1) throw ConfigError("two ego actors");

  std::set<std::string> sensor_ids;
  for (const auto& s : c.sensors) {
    if (!sensor_ids.insert(s.id).second) {
      throw ConfigError("duplicate sensor id '" + s.id + "'");
    }
    if (s.parent != "world") {
      const ActorSpec* parent = c.FindActor(s.parent);
      if (parent == nullptr) {
        throw ConfigError("sensor '" + s.id + "' parent '" + s.parent +
                          "' does not exist");
      }
      if (!parent->is_ego && !IsStaticKind(parent->kind)) {
        throw ConfigError("sensor '" + s.id +
                          "' must be mounted on the ego, a static actor, or world");
      }
    }
    try {
      ValidateLidarParams(s.lidar);
    } catch (const Error& e) {
      throw ConfigError("sensor '" + s.id + "': " + e.what());
    }
  }
}

ScenarioConfig LoadScenario(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("malformed scenario document (line " +
                      std::to_string(e.mark.line + 1) + "): " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError("scenario document must be a mapping");
  // detector/tracker/fusion/export sections are consumed by the pipeline.
  CheckKeys(root, "",
            {"name", "road_kind", "road", "weather", "frame_count", "frame_dt",
             "geo_origin", "actors", "sensors", "seed", "detector", "tracker",
             "fusion", "export"});

  ScenarioConfig c;
  if (const YAML::Node n = root["name"]; n.IsDefined()) {
    c.name = As<std::string>(n, "name", "a string");
  }
  c.road.kind = ParseEnum(Required(root, "", "road_kind"), "road_kind",
                          {RoadKind::kStraight, RoadKind::kCurve,
                           RoadKind::kIntersection});
  if (const YAML::Node r = root["road"]; r.IsDefined()) {
    CheckKeys(r, "road", {"lane_width", "length", "radius"});
    c.road.lane_width = OptDouble(r, "road", "lane_width", c.road.lane_width);
    c.road.length = OptDouble(r, "road", "length", c.road.length);
    c.road.radius = OptDouble(r, "road", "radius", c.road.radius);
    if (!(c.road.lane_width > 0 && c.road.length > 0 && c.road.radius > 0)) {
      Fail(r, "road", "lane_width, length and radius must be > 0");
    }
  }
  if (const YAML::Node n = root["weather"]; n.IsDefined()) {
    c.weather = ParseEnum(n, "weather", {Weather::kSunny, Weather::kCloudy,
                                         Weather::kFoggy, Weather::kRainy});
  }
  const YAML::Node fc = Required(root, "", "frame_count");
  c.frame_count = As<int>(fc, "frame_count", "an integer");
  if (c.frame_count < 1) Fail(fc, "frame_count", "must be >= 1");
  const YAML::Node dt = Required(root, "", "frame_dt");
  c.frame_dt = AsDouble(dt, "frame_dt");
  if (!(c.frame_dt > 0.0)) Fail(dt, "frame_dt", "must be > 0");
  if (const YAML::Node n = root["seed"]; n.IsDefined()) {
    c.seed = As<std::uint64_t>(n, "seed", "an unsigned 64-bit integer");
  }
  const YAML::Node geo = Required(root, "", "geo_origin");
  CheckKeys(geo, "geo_origin", {"lat0", "lon0", "alt0"});
  c.geo_origin.lat0 = AsDouble(Required(geo, "geo_origin", "lat0"), "geo_origin.lat0");
  c.geo_origin.lon0 = AsDouble(Required(geo, "geo_origin", "lon0"), "geo_origin.lon0");
  c.geo_origin.alt0 = OptDouble(geo, "geo_origin", "alt0", 0.0);
  if (!(std::abs(c.geo_origin.lat0) < 90.0)) {
    Fail(geo["lat0"], "geo_origin.lat0", "must satisfy |lat0| < 90");
  }

  const YAML::Node actors = Required(root, "", "actors");
  if (!actors.IsSequence()) Fail(actors, "actors", "expected a list");
  for (std::size_t i = 0; i < actors.size(); ++i) {
    c.actors.push_back(ParseActor(actors[i], "actors[" + std::to_string(i) + "]"));
  }

  if (const YAML::Node sensors = root["sensors"]; sensors.IsDefined()) {
    if (!sensors.IsSequence()) Fail(sensors, "sensors", "expected a list");
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      const std::string path = "sensors[" + std::to_string(i) + "]";
      const YAML::Node n = sensors[i];
      CheckKeys(n, path, {"id", "kind", "parent", "mount", "lidar"});
      SensorSpec s;
      s.id = As<std::string>(Required(n, path, "id"), path + ".id", "a string");
      if (const YAML::Node k = n["kind"]; k.IsDefined()) {
        const auto kind = As<std::string>(k, path + ".kind", "a string");
        if (kind != "lidar") Fail(k, path + ".kind", "unknown sensor kind '" + kind + "'");
      }
      if (const YAML::Node p = n["parent"]; p.IsDefined()) {
        s.parent = As<std::string>(p, path + ".parent", "a string");
      }
      if (const YAML::Node m = n["mount"]; m.IsDefined()) {
        s.mount = ParsePose(m, path + ".mount");
      }
      const bool roadside = c.IsRoadsideSensor(s);
      s.lidar = ParseLidar(n["lidar"], path + ".lidar",
                           roadside ? LidarParams::RoadsideDefault()
                                    : LidarParams::VehicleDefault());
      c.sensors.push_back(s);
    }
  }
  ValidateScenario(c);
  return c;
}

ScenarioConfig LoadScenarioFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return LoadScenario(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Pose ActorPoseAt(const ActorSpec& actor, double t) {
  return std::visit(
      [&](const auto& m) -> Pose {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantMotion>) {
          return actor.initial_pose;
        } else if constexpr (std::is_same_v<M, LinearMotion>) {
          Pose p = actor.initial_pose;
          p.position.x() += m.speed * t * std::cos(p.yaw);
          p.position.y() += m.speed * t * std::sin(p.yaw);
          return p;
        } else {
          const auto& pts = m.points;
          if (t <= pts.front().time) return pts.front().pose;
          if (t >= pts.back().time) return pts.back().pose;
          const auto it = std::upper_bound(
              pts.begin(), pts.end(), t,
              [](double v, const Waypoint& w) { return v < w.time; });
          const Waypoint& b = *it;
          const Waypoint& a = *(it - 1);
          const double f = (t - a.time) / (b.time - a.time);
          Pose p;
          p.position = a.pose.position + f * (b.pose.position - a.pose.position);
          p.roll = NormalizeAngle(a.pose.roll + f * NormalizeAngle(b.pose.roll - a.pose.roll));
          p.pitch = NormalizeAngle(a.pose.pitch + f * NormalizeAngle(b.pose.pitch - a.pose.pitch));
          p.yaw = NormalizeAngle(a.pose.yaw + f * NormalizeAngle(b.pose.yaw - a.pose.yaw));
          return p;
        }
      },
      actor.motion);
}

Pose ActorPose(const ScenarioConfig& config, std::string_view actor_id,
               int frame_index) {
  const ActorSpec* actor = config.FindActor(actor_id);
  if (actor == nullptr) {
    throw Error("unknown actor id '" + std::string(actor_id) + "'");
  }
  if (frame_index < 0 || frame_index >= config.frame_count) {
    throw Error("frame index " + std::to_string(frame_index) +
                " outside [0, " + std::to_string(config.frame_count) + ")");
  }
  return ActorPoseAt(*actor, frame_index * config.frame_dt);
}

Pose SensorPose(const ScenarioConfig& config, const SensorSpec& sensor,
                int frame_index) {
  if (sensor.parent == "world") return sensor.mount;
  return Compose(ActorPose(config, sensor.parent, frame_index), sensor.mount);
}

WorldSnapshot StepWorld(const ScenarioConfig& config, int frame_index) {
  WorldSnapshot snap;
  snap.frame = frame_index;
  snap.timestamp = frame_index * config.frame_dt;
  snap.frame_id = "world";
  snap.actors.reserve(config.actors.size());
  for (const auto& a : config.actors) {
    ActorBox box;
    box.id = a.id;
    box.kind = a.kind;
    box.is_ego = a.is_ego;
    box.pose = ActorPose(config, a.id, frame_index);
    box.box.center = box.pose.position;
    box.box.length = a.dims.length;
    box.box.width = a.dims.width;
    box.box.height = a.dims.height;
    box.box.yaw = box.pose.yaw;
    snap.actors.push_back(std::move(box));
  }
  return snap;
}

std::vector<std::vector<Vec3>> LanePolylines(const RoadSpec& road) {
  std::vector<std::vector<Vec3>> lines;
  const double half = road.length / 2.0;
  const double w = road.lane_width;
  auto straight = [&](double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    // Two lanes: outer edges at +-w, center divider at 0.
    for (double off : {-w, 0.0, w}) {
      lines.push_back({Vec3(-half * c - off * s, -half * s + off * c, 0.0),
                       Vec3(half * c - off * s, half * s + off * c, 0.0)});
    }
  };
  switch (road.kind) {
    case RoadKind::kStraight:
      straight(0.0);
      break;
    case RoadKind::kIntersection:
      straight(0.0);
      straight(kPi / 2.0);
      break;
    case RoadKind::kCurve: {
      // Arc starting at the origin heading +x, turning left around (0, R).
      const double sweep = road.length / road.radius;
      const int segments = std::max(8, static_cast<int>(std::ceil(sweep / 0.05)));
      for (double off : {-w, 0.0, w}) {
        std::vector<Vec3> line;
        const double r = road.radius - off;
        for (int i = 0; i <= segments; ++i) {
          const double a = -kPi / 2.0 + sweep * i / segments;
          line.emplace_back(r * std::cos(a), road.radius + r * std::sin(a), 0.0);
        }
        lines.push_back(std::move(line));
      }
      break;
    }
  }
  return lines;
}

}  // namespace coopsim
