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

#include "coopsim/lidar_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace coopsim {

namespace {
constexpr double kDeg = kPi / 180.0;
}  // namespace

LidarParams LidarParams::VehicleDefault() { return {}; }

LidarParams LidarParams::RoadsideDefault() {
  LidarParams p;
  p.vertical_min_deg = -45.0;
  p.vertical_max_deg = 0.0;
  return p;
}

int LidarParams::AzimuthSteps() const {
  const double span = azimuth_max_deg - azimuth_min_deg;
  if (span >= 360.0 - 1e-9) {
    return static_cast<int>(std::floor(360.0 / azimuth_step_deg + 1e-9));
  }
  return static_cast<int>(std::floor(span / azimuth_step_deg + 1e-9)) + 1;
}

double LidarParams::ChannelElevationDeg(int channel) const {
  if (channels == 1) return vertical_min_deg;
  return vertical_min_deg +
         (vertical_max_deg - vertical_min_deg) * channel / (channels - 1);
}

double LidarParams::AzimuthDeg(int step) const {
  return azimuth_min_deg + azimuth_step_deg * step;
}

void ValidateLidarParams(const LidarParams& p) {
  if (p.channels < 1) throw Error("lidar channels must be >= 1");
  if (!(p.vertical_min_deg < p.vertical_max_deg)) {
    throw Error("lidar vertical_fov min must be < max");
  }
  if (!(p.azimuth_min_deg < p.azimuth_max_deg) ||
      p.azimuth_max_deg - p.azimuth_min_deg > 360.0 + 1e-9) {
    throw Error("lidar azimuth_fov must be an increasing span of at most 360 deg");
  }
  if (!(p.azimuth_step_deg > 0.0) ||
      p.azimuth_step_deg > p.azimuth_max_deg - p.azimuth_min_deg) {
    throw Error("lidar azimuth_step must be > 0 and <= azimuth span");
  }
  if (!(p.max_range > 0.0)) throw Error("lidar max_range must be > 0");
  if (!(p.range_noise_sigma >= 0.0)) {
    throw Error("lidar range_noise_sigma must be >= 0");
  }
  if (!(p.dropout_prob >= 0.0 && p.dropout_prob < 1.0)) {
    throw Error("lidar dropout_prob must be in [0, 1)");
  }
}

std::optional<double> RayHit(const Vec3& origin, const Vec3& dir,
                             const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 d0 = origin - box.center;
  const double o[3] = {c * d0.x() + s * d0.y(), -s * d0.x() + c * d0.y(),
                       d0.z()};
  const double v[3] = {c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(),
                       dir.z()};
  const double half[3] = {box.length / 2.0, box.width / 2.0, box.height / 2.0};

  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(v[k]) < 1e-15) {
      if (o[k] < -half[k] || o[k] > half[k]) return std::nullopt;
      continue;
    }
    double t1 = (-half[k] - o[k]) / v[k];
    double t2 = (half[k] - o[k]) / v[k];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_far < 0.0) return std::nullopt;
  return t_near >= 0.0 ? t_near : t_far;
}

namespace {

struct Candidate {
  const Box3D* box;
  double radius;
};

}  // namespace

PointCloud Scan(const Pose& sensor_pose, const LidarParams& params,
                const WorldSnapshot& world, std::uint64_t rng_seed,
                std::string frame_id, std::string_view ignore_actor) {
  ValidateLidarParams(params);
  PointCloud cloud;
  cloud.frame = std::move(frame_id);

  const Vec3 origin = sensor_pose.position;
  const Eigen::Matrix3d rot = sensor_pose.Rotation();

  std::vector<Candidate> candidates;
  for (const auto& actor : world.actors) {
    if (!ignore_actor.empty() && actor.id == ignore_actor) continue;
    const Box3D& b = actor.box;
    const double radius =
        0.5 * std::sqrt(b.length * b.length + b.width * b.width +
                        b.height * b.height);
    if ((b.center - origin).norm() - radius > params.max_range) continue;
    candidates.push_back({&b, radius});
  }

  const int az_steps = params.AzimuthSteps();
  std::vector<double> az_cos(az_steps), az_sin(az_steps);
  for (int a = 0; a < az_steps; ++a) {
    az_cos[a] = std::cos(params.AzimuthDeg(a) * kDeg);
    az_sin[a] = std::sin(params.AzimuthDeg(a) * kDeg);
  }

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = params.range_noise_sigma;

  cloud.points.reserve(static_cast<std::size_t>(params.channels) * az_steps / 2);
  for (int ch = 0; ch < params.channels; ++ch) {
    const double el = params.ChannelElevationDeg(ch) * kDeg;
    const double ce = std::cos(el);
    const double se = std::sin(el);
    for (int a = 0; a < az_steps; ++a) {
      const Vec3 local(ce * az_cos[a], ce * az_sin[a], se);
      const Vec3 dir = rot * local;

      double best = params.max_range;
      bool hit = false;
      float intensity = kGroundIntensity;
      if (dir.z() < 0.0 && origin.z() > 0.0) {
        const double t = -origin.z() / dir.z();
        if (t <= best) {
          best = t;
          hit = true;
        }
      }
      for (const auto& cand : candidates) {
        // Cheap sphere rejection before the slab test.
        const Vec3 oc = cand.box->center - origin;
        const double along = oc.dot(dir);
        if (along < -cand.radius) continue;
        if (oc.squaredNorm() - along * along > cand.radius * cand.radius) {
          continue;
        }
        const auto t = RayHit(origin, dir, *cand.box);
        if (t && *t <= best) {
          best = *t;
          hit = true;
          intensity = kActorIntensity;
        }
      }
      if (!hit) continue;

      double range = best;
      if (params.dropout_prob > 0.0 && uniform(rng) < params.dropout_prob) {
        continue;
      }
      if (sigma > 0.0) {
        range += sigma * std::clamp(normal(rng), -5.0, 5.0);
        range = std::max(range, 0.0);
      }
      const Vec3 p = range * local;
      cloud.points.push_back({static_cast<float>(p.x()),
                              static_cast<float>(p.y()),
                              static_cast<float>(p.z()), intensity});
    }
  }
  return cloud;
}

}  // namespace coopsim
