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

#include "coopsim/world.hpp"

namespace coopsim {

std::string_view ToString(ActorKind kind) {
  switch (kind) {
    case ActorKind::kCar: return "car";
    case ActorKind::kPedestrian: return "pedestrian";
    case ActorKind::kCyclist: return "cyclist";
    case ActorKind::kBuilding: return "building";
    case ActorKind::kRoadsideMast: return "roadside_mast";
  }
  return "unknown";
}

ActorKind ParseActorKind(std::string_view name) {
  if (name == "car") return ActorKind::kCar;
  if (name == "pedestrian") return ActorKind::kPedestrian;
  if (name == "cyclist") return ActorKind::kCyclist;
  if (name == "building") return ActorKind::kBuilding;
  if (name == "roadside_mast") return ActorKind::kRoadsideMast;
  throw Error("unknown actor kind '" + std::string(name) + "'");
}

bool IsStaticKind(ActorKind kind) {
  return kind == ActorKind::kBuilding || kind == ActorKind::kRoadsideMast;
}

bool IsDetectableKind(ActorKind kind) {
  return kind == ActorKind::kCar || kind == ActorKind::kPedestrian ||
         kind == ActorKind::kCyclist;
}

const ActorBox* WorldSnapshot::Find(std::string_view id) const {
  for (const auto& a : actors) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

WorldSnapshot ToSensorFrame(const WorldSnapshot& world, const Pose& sensor_pose,
                            std::string frame_id) {
  const Pose to_sensor = Inverse(sensor_pose);
  WorldSnapshot out = world;
  out.frame_id = std::move(frame_id);
  for (auto& a : out.actors) {
    a.pose = Compose(to_sensor, a.pose);
    a.box = TransformBox(to_sensor, a.box);
  }
  return out;
}

}  // namespace coopsim
