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

#include "coopsim/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace coopsim {

std::string_view ToString(SensorRole role) {
  return role == SensorRole::kVehicle ? "vehicle" : "roadside";
}

std::string_view ToString(KeepRule rule) {
  return rule == KeepRule::kHigherScore ? "higher_score" : "weighted_average";
}

std::optional<KeepRule> ParseKeepRule(std::string_view name) {
  if (name == "higher_score") return KeepRule::kHigherScore;
  if (name == "weighted_average") return KeepRule::kWeightedAverage;
  return std::nullopt;
}

void ValidateFusionParams(const FusionParams& params) {
  if (!(params.dedup_iou_threshold >= 0.0 && params.dedup_iou_threshold <= 1.0)) {
    throw Error("fusion dedup_iou_threshold must be in [0, 1]");
  }
}

namespace {

Pose SensorToGlobal(const SensorRegistration& reg, const std::optional<Pose>& vehicle_pose) {
  if (reg.role == SensorRole::kVehicle) {
    if (!vehicle_pose) {
      throw Error("stream '" + reg.stream_id + "' is a vehicle stream and needs a vehicle pose");
    }
    return Compose(*vehicle_pose, reg.mount);
  }
  if (vehicle_pose) {
    throw Error("stream '" + reg.stream_id + "' is a roadside stream; vehicle pose not allowed");
  }
  return Compose(reg.install_pose, reg.mount);
}

std::vector<Detection> Transform(const std::vector<Detection>& dets, const Pose& pose) {
  std::vector<Detection> out = dets;
  for (auto& d : out) d.box = TransformBox(pose, d.box);
  return out;
}

Detection WeightedAverage(const Detection& a, const Detection& b) {
  const double wa = std::max(a.score, 1e-12);
  const double wb = std::max(b.score, 1e-12);
  const double sum = wa + wb;
  // Align b's heading with a's modulo pi before averaging.
  double dyaw = NormalizeAngle(b.box.yaw - a.box.yaw);
  if (std::abs(dyaw) > kPi / 2.0) dyaw = NormalizeAngle(dyaw + kPi);
  Detection out;
  out.cls = a.cls;
  out.source = "fused";
  out.score = std::max(a.score, b.score);
  out.box.center = (wa * a.box.center + wb * b.box.center) / sum;
  out.box.yaw = NormalizeAngle(a.box.yaw + wb * dyaw / sum);
  out.box.length = (wa * a.box.length + wb * b.box.length) / sum;
  out.box.width = (wa * a.box.width + wb * b.box.width) / sum;
  out.box.height = (wa * a.box.height + wb * b.box.height) / sum;
  return out;
}

}  // namespace

std::vector<Detection> ToGlobal(const std::vector<Detection>& detections,
                                const SensorRegistration& registration,
                                const std::optional<Pose>& vehicle_pose) {
  return Transform(detections, SensorToGlobal(registration, vehicle_pose));
}

std::vector<Detection> ToSensor(const std::vector<Detection>& detections,
                                const SensorRegistration& registration,
                                const std::optional<Pose>& vehicle_pose) {
  return Transform(detections, Inverse(SensorToGlobal(registration, vehicle_pose)));
}

void SortDetections(std::vector<Detection>& dets) {
  auto key = [](const Detection& d) {
    return std::make_tuple(-d.score, std::string_view(d.source), d.box.center.x(),
                           d.box.center.y(), d.box.center.z(), d.box.yaw,
                           static_cast<int>(d.cls), d.box.length, d.box.width, d.box.height);
  };
  std::stable_sort(dets.begin(), dets.end(),
                   [&](const Detection& a, const Detection& b) { return key(a) < key(b); });
}

std::vector<Detection> Merge(const std::vector<Detection>& vehicle,
                             const std::vector<Detection>& roadside,
                             const FusionParams& params) {
  ValidateFusionParams(params);
  struct Pair {
    double iou;
    std::size_t v, r;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < vehicle.size(); ++i) {
    for (std::size_t j = 0; j < roadside.size(); ++j) {
      if (vehicle[i].cls != roadside[j].cls) continue;
      const double iou = Iou3d(vehicle[i].box, roadside[j].box);
      if (iou > 0.0 && iou >= params.dedup_iou_threshold) pairs.push_back({iou, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.v, a.r) < std::tie(b.v, b.r);
  });

  std::vector<Detection> v = vehicle;
  std::vector<char> v_alive(vehicle.size(), 1), r_alive(roadside.size(), 1);
  std::vector<char> v_used(vehicle.size(), 0), r_used(roadside.size(), 0);
  for (const Pair& p : pairs) {
    if (v_used[p.v] || r_used[p.r]) continue;
    v_used[p.v] = r_used[p.r] = 1;
    if (params.keep_rule == KeepRule::kWeightedAverage) {
      v[p.v] = WeightedAverage(vehicle[p.v], roadside[p.r]);
      r_alive[p.r] = 0;
    } else if (roadside[p.r].score > vehicle[p.v].score) {
      v_alive[p.v] = 0;
    } else {
      r_alive[p.r] = 0;
    }
  }

  std::vector<Detection> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v_alive[i]) out.push_back(v[i]);
  }
  for (std::size_t j = 0; j < roadside.size(); ++j) {
    if (r_alive[j]) out.push_back(roadside[j]);
  }
  SortDetections(out);
  return out;
}

std::vector<Detection> RemoveSelf(const std::vector<Detection>& detections,
                                  const Box3D& ego_box, double iou_threshold) {
  std::vector<Detection> out;
  for (const auto& d : detections) {
    if (Iou3d(d.box, ego_box) <= iou_threshold) out.push_back(d);
  }
  return out;
}

}  // namespace coopsim
