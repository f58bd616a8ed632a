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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopsim/geometry.hpp"
#include "coopsim/kitti_io.hpp"
#include "coopsim/lidar_sim.hpp"
#include "coopsim/world.hpp"

namespace coopsim {

enum class ObjectClass { kCar, kPedestrian, kCyclist };

/// KITTI spelling: "Car", "Pedestrian", "Cyclist".
std::string_view ToString(ObjectClass cls);
std::optional<ObjectClass> ParseObjectClass(std::string_view name);
std::optional<ObjectClass> ClassOf(ActorKind kind);

struct Detection {
  Box3D box;
  ObjectClass cls = ObjectClass::kCar;
  double score = 1.0;
  std::string source;

  bool operator==(const Detection&) const = default;
};

struct DetectorParams {
  int min_points = 20;
  double center_noise_sigma = 0.15;
  double yaw_noise_sigma = 0.05;
  double dims_noise_sigma = 0.05;
  double max_detect_range = 80.0;
  int score_saturation_points = 200;
  /// Mean false positives per frame (Poisson); 0 disables clutter.
  double clutter_rate = 0.0;
  /// Returns lie on box faces, so counting uses the box grown by this much
  /// on every side except the bottom.
  double surface_margin = 0.1;
  /// Bottom of the counting region sits this far above the box bottom so
  /// ground returns are excluded.
  double ground_clearance = 0.05;
};

void ValidateDetectorParams(const DetectorParams& params);

/// Number of cloud points strictly inside `box` (same frame).
int CountPointsInside(const PointCloud& cloud, const Box3D& box);

/// Region whose interior points are attributed to a truth box.
Box3D CountingRegion(const Box3D& truth, const DetectorParams& params);

/// Point-count detector over ground truth. `truth` must be expressed in the
/// cloud's frame. Output is sorted by ascending range from the sensor.
std::vector<Detection> Detect(const PointCloud& cloud, const WorldSnapshot& truth,
                              const DetectorParams& params, std::uint64_t rng_seed,
                              const std::string& source);

struct IngestResult {
  std::vector<Detection> detections;
  int skipped = 0;  ///< labels whose type is not a known class
};

/// Converts externally produced labels (sensor frame, one frame index) into
/// detections; missing scores default to 1.0.
IngestResult IngestExternal(const std::vector<kitti::LabelRecord>& labels,
                            const std::string& source);

/// Detection expressed as a KITTI label in the same frame.
kitti::LabelRecord DetectionToLabel(const Detection& det, int frame,
                                    int track_id = -1);

}  // namespace coopsim
