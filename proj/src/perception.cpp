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

#include "coopsim/perception.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "coopsim/seed.hpp"

namespace coopsim {

std::string_view ToString(ObjectClass cls) {
  switch (cls) {
    case ObjectClass::kCar: return "Car";
    case ObjectClass::kPedestrian: return "Pedestrian";
    case ObjectClass::kCyclist: return "Cyclist";
  }
  return "Unknown";
}

std::optional<ObjectClass> ParseObjectClass(std::string_view name) {
  if (name == "Car") return ObjectClass::kCar;
  if (name == "Pedestrian") return ObjectClass::kPedestrian;
  if (name == "Cyclist") return ObjectClass::kCyclist;
  return std::nullopt;
}

std::optional<ObjectClass> ClassOf(ActorKind kind) {
  switch (kind) {
    case ActorKind::kCar: return ObjectClass::kCar;
    case ActorKind::kPedestrian: return ObjectClass::kPedestrian;
    case ActorKind::kCyclist: return ObjectClass::kCyclist;
    default: return std::nullopt;
  }
}

void ValidateDetectorParams(const DetectorParams& p) {
  if (p.min_points < 1) throw Error("detector min_points must be >= 1");
  if (!(p.center_noise_sigma >= 0 && p.yaw_noise_sigma >= 0 && p.dims_noise_sigma >= 0)) {
    throw Error("detector noise sigmas must be >= 0");
  }
  if (!(p.max_detect_range > 0)) throw Error("detector max_detect_range must be > 0");
  if (p.score_saturation_points < 1) {
    throw Error("detector score_saturation_points must be >= 1");
  }
  if (!(p.clutter_rate >= 0)) throw Error("detector clutter_rate must be >= 0");
  if (!(p.surface_margin >= 0 && p.ground_clearance >= 0)) {
    throw Error("detector surface_margin and ground_clearance must be >= 0");
  }
}

Box3D CountingRegion(const Box3D& truth, const DetectorParams& params) {
  Box3D r = truth;
  r.length += 2.0 * params.surface_margin;
  r.width += 2.0 * params.surface_margin;
  const double bottom = truth.center.z() - truth.height / 2.0 + params.ground_clearance;
  const double top = truth.center.z() + truth.height / 2.0 + params.surface_margin;
  r.height = std::max(top - bottom, 1e-6);
  r.center.z() = 0.5 * (top + bottom);
  return r;
}

int CountPointsInside(const PointCloud& cloud, const Box3D& box) {
  int n = 0;
  for (const auto& p : cloud.points) {
    if (box.ContainsStrict(Vec3(p.x, p.y, p.z))) ++n;
  }
  return n;
}

namespace {

struct Ranked {
  double range;
  std::string key;
  Detection det;
};

double PositiveDim(double truth, double noisy) {
  return std::max(noisy, 0.1 * truth);
}

}  // namespace

std::vector<Detection> Detect(const PointCloud& cloud, const WorldSnapshot& truth,
                              const DetectorParams& params, std::uint64_t rng_seed,
                              const std::string& source) {
  ValidateDetectorParams(params);
  if (cloud.frame != truth.frame_id) {
    throw Error("detector frame mismatch: cloud in '" + cloud.frame +
                "', truth in '" + truth.frame_id + "'");
  }
  std::vector<Ranked> found;
  for (const auto& actor : truth.actors) {
    const auto cls = ClassOf(actor.kind);
    if (!cls) continue;
    const double range = actor.box.center.norm();
    if (range > params.max_detect_range) continue;
    const int count = CountPointsInside(cloud, CountingRegion(actor.box, params));
    if (count < params.min_points) continue;

    // Per-target stream so one target's noise does not depend on the others.
    std::mt19937_64 rng(DeriveSeed(rng_seed, actor.id));
    std::normal_distribution<double> n01(0.0, 1.0);
    Detection d;
    d.cls = *cls;
    d.source = source;
    d.score = std::min(1.0, static_cast<double>(count) / params.score_saturation_points);
    d.box = actor.box;
    d.box.center.x() += params.center_noise_sigma * n01(rng);
    d.box.center.y() += params.center_noise_sigma * n01(rng);
    d.box.center.z() += params.center_noise_sigma * n01(rng);
    d.box.yaw = NormalizeAngle(d.box.yaw + params.yaw_noise_sigma * n01(rng));
    d.box.length = PositiveDim(actor.box.length, d.box.length + params.dims_noise_sigma * n01(rng));
    d.box.width = PositiveDim(actor.box.width, d.box.width + params.dims_noise_sigma * n01(rng));
    d.box.height = PositiveDim(actor.box.height, d.box.height + params.dims_noise_sigma * n01(rng));
    found.push_back({range, actor.id, std::move(d)});
  }

  if (params.clutter_rate > 0.0) {
    std::mt19937_64 rng(DeriveSeed(rng_seed, "clutter"));
    std::poisson_distribution<int> count(params.clutter_rate);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double r = params.max_detect_range * std::sqrt(unit(rng));
      const double theta = 2.0 * kPi * unit(rng);
      Detection d;
      d.cls = ObjectClass::kCar;
      d.source = source;
      d.score = unit(rng);
      d.box.center = Vec3(r * std::cos(theta), r * std::sin(theta), 0.0);
      d.box.length = 4.2;
      d.box.width = 1.8;
      d.box.height = 1.5;
      d.box.yaw = NormalizeAngle(2.0 * kPi * unit(rng));
      found.push_back({d.box.center.norm(), "~clutter" + std::to_string(i), std::move(d)});
    }
  }

  std::sort(found.begin(), found.end(), [](const Ranked& a, const Ranked& b) {
    if (a.range != b.range) return a.range < b.range;
    return a.key < b.key;
  });
  std::vector<Detection> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(std::move(f.det));
  return out;
}

IngestResult IngestExternal(const std::vector<kitti::LabelRecord>& labels,
                            const std::string& source) {
  IngestResult result;
  for (const auto& label : labels) {
    if (label.frame != labels.front().frame) {
      throw Error("external labels span several frames (" +
                  std::to_string(labels.front().frame) + " and " +
                  std::to_string(label.frame) + ")");
    }
    const auto cls = ParseObjectClass(label.type);
    if (!cls || !(label.height > 0 && label.width > 0 && label.length > 0)) {
      ++result.skipped;
      continue;
    }
    Detection d;
    d.box = kitti::LabelToBox(label);
    d.cls = *cls;
    d.score = std::clamp(label.score.value_or(1.0), 0.0, 1.0);
    d.source = source;
    result.detections.push_back(std::move(d));
  }
  return result;
}

kitti::LabelRecord DetectionToLabel(const Detection& det, int frame, int track_id) {
  return kitti::BoxToLabel(det.box, std::string(ToString(det.cls)), frame, track_id,
                           det.score);
}

}  // namespace coopsim
