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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopsim/geometry.hpp"
#include "coopsim/perception.hpp"

namespace coopsim {

enum class SensorRole { kVehicle, kRoadside };

std::string_view ToString(SensorRole role);

struct SensorRegistration {
  std::string stream_id;
  SensorRole role = SensorRole::kVehicle;
  Pose mount;
  /// Fixed global pose of the roadside carrier; unused for vehicle streams.
  Pose install_pose;
};

enum class KeepRule { kHigherScore, kWeightedAverage };

std::string_view ToString(KeepRule rule);
std::optional<KeepRule> ParseKeepRule(std::string_view name);

struct FusionParams {
  double dedup_iou_threshold = 0.3;
  KeepRule keep_rule = KeepRule::kHigherScore;
};

void ValidateFusionParams(const FusionParams& params);

/// Expresses sensor-frame detections in the global frame. Vehicle streams
/// need the carrier pose for the frame; roadside streams must not get one.
std::vector<Detection> ToGlobal(const std::vector<Detection>& detections,
                                const SensorRegistration& registration,
                                const std::optional<Pose>& vehicle_pose);

/// Inverse of ToGlobal.
std::vector<Detection> ToSensor(const std::vector<Detection>& detections,
                                const SensorRegistration& registration,
                                const std::optional<Pose>& vehicle_pose);

/// Decision-level fusion of two global-frame detection lists. Output is
/// ordered by descending score, then source, then center x.
std::vector<Detection> Merge(const std::vector<Detection>& vehicle,
                             const std::vector<Detection>& roadside,
                             const FusionParams& params = {});

/// Drops detections of the ego vehicle itself (roadside sensors see it).
std::vector<Detection> RemoveSelf(const std::vector<Detection>& detections,
                                  const Box3D& ego_box, double iou_threshold = 0.1);

void SortDetections(std::vector<Detection>& detections);

}  // namespace coopsim
