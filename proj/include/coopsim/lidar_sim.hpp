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
#include "coopsim/world.hpp"

namespace coopsim {

struct LidarParams {
  int channels = 32;
  double vertical_min_deg = -25.0;
  double vertical_max_deg = 5.0;
  double azimuth_min_deg = -180.0;
  double azimuth_max_deg = 180.0;
  double azimuth_step_deg = 0.4;
  double max_range = 100.0;
  double range_noise_sigma = 0.0;
  double dropout_prob = 0.0;

  static LidarParams VehicleDefault();
  static LidarParams RoadsideDefault();

  int AzimuthSteps() const;
  double ChannelElevationDeg(int channel) const;
  double AzimuthDeg(int step) const;

  bool operator==(const LidarParams&) const = default;
};

/// Throws Error naming the violated rule.
void ValidateLidarParams(const LidarParams& params);

struct Point {
  float x = 0.0F;
  float y = 0.0F;
  float z = 0.0F;
  float intensity = 0.0F;

  bool operator==(const Point&) const = default;
};

struct PointCloud {
  std::string frame;
  std::vector<Point> points;

  bool operator==(const PointCloud&) const = default;
};

constexpr float kActorIntensity = 0.5F;
constexpr float kGroundIntensity = 0.2F;

/// Slab test against an oriented box; nearest non-negative hit distance.
std::optional<double> RayHit(const Vec3& origin, const Vec3& dir,
                             const Box3D& box);

/// Simulates one sweep from a sensor at global `sensor_pose`. Points come out
/// in the sensor frame, channel-major then azimuth order. The actor named
/// `ignore_actor` (usually the sensor's own carrier) is transparent.
PointCloud Scan(const Pose& sensor_pose, const LidarParams& params,
                const WorldSnapshot& world, std::uint64_t rng_seed,
                std::string frame_id = "lidar",
                std::string_view ignore_actor = {});

}  // namespace coopsim
