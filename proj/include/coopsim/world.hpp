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

#include <string>
#include <string_view>
#include <vector>

#include "coopsim/geometry.hpp"

namespace coopsim {

enum class ActorKind { kCar, kPedestrian, kCyclist, kBuilding, kRoadsideMast };

std::string_view ToString(ActorKind kind);
/// Throws Error for unknown names. Accepts the lower-case config spelling.
ActorKind ParseActorKind(std::string_view name);

/// Buildings and masts never move.
bool IsStaticKind(ActorKind kind);
/// Kinds a detector may report (cars, pedestrians, cyclists).
bool IsDetectableKind(ActorKind kind);

struct ActorBox {
  std::string id;
  ActorKind kind = ActorKind::kCar;
  bool is_ego = false;
  Pose pose;
  Box3D box;

  bool operator==(const ActorBox&) const = default;
};

/// Every actor's box at one instant, expressed in `frame_id`.
struct WorldSnapshot {
  int frame = 0;
  double timestamp = 0.0;
  std::string frame_id = "world";
  std::vector<ActorBox> actors;

  const ActorBox* Find(std::string_view id) const;
  bool operator==(const WorldSnapshot&) const = default;
};

/// Re-expresses a global snapshot in the frame of a sensor whose global pose
/// is `sensor_pose`.
WorldSnapshot ToSensorFrame(const WorldSnapshot& world, const Pose& sensor_pose,
                            std::string frame_id);

}  // namespace coopsim
