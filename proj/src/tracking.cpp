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

#include "coopsim/tracking.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

namespace coopsim {

void ValidateTrackerParams(const TrackerParams& p) {
  if (!(p.iou_threshold >= 0.0 && p.iou_threshold <= 1.0)) {
    throw Error("tracker iou_threshold must be in [0, 1]");
  }
  if (p.min_hits < 1) throw Error("tracker min_hits must be >= 1");
  if (p.max_age < 0) throw Error("tracker max_age must be >= 0");
  if (!(p.dt > 0.0)) throw Error("tracker dt must be > 0");
  if (!(p.process_noise_scale >= 0.0 && p.measurement_noise_scale > 0.0)) {
    throw Error("tracker noise scales must be non-negative (measurement > 0)");
  }
}

Box3D TrackState::Box() const {
  Box3D b;
  b.center = x.head<3>();
  b.yaw = NormalizeAngle(x(3));
  b.length = x(4);
  b.width = x(5);
  b.height = x(6);
  return b;
}

Association Associate(const std::vector<PredictedBox>& predicted,
                      const std::vector<Detection>& detections,
                      double iou_threshold) {
  Association out;
  std::vector<char> track_matched(predicted.size(), 0);
  std::vector<char> det_matched(detections.size(), 0);
  for (ObjectClass cls : {ObjectClass::kCar, ObjectClass::kPedestrian, ObjectClass::kCyclist}) {
    std::vector<int> ti, di;
    for (int i = 0; i < static_cast<int>(predicted.size()); ++i) {
      if (predicted[i].cls == cls) ti.push_back(i);
    }
    for (int j = 0; j < static_cast<int>(detections.size()); ++j) {
      if (detections[j].cls == cls) di.push_back(j);
    }
    if (ti.empty() || di.empty()) continue;
    Eigen::MatrixXd iou(ti.size(), di.size());
    for (std::size_t a = 0; a < ti.size(); ++a) {
      for (std::size_t b = 0; b < di.size(); ++b) {
        iou(a, b) = Iou3d(predicted[ti[a]].box, detections[di[b]].box);
      }
    }
    const Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(iou.rows(), iou.cols()) - iou;
    for (const auto& [a, b] : Hungarian(cost)) {
      if (iou(a, b) < iou_threshold || iou(a, b) <= 0.0) continue;
      out.matches.emplace_back(ti[a], di[b]);
      track_matched[ti[a]] = 1;
      det_matched[di[b]] = 1;
    }
  }
  std::sort(out.matches.begin(), out.matches.end());
  for (int i = 0; i < static_cast<int>(predicted.size()); ++i) {
    if (!track_matched[i]) out.unmatched_tracks.push_back(i);
  }
  for (int j = 0; j < static_cast<int>(detections.size()); ++j) {
    if (!det_matched[j]) out.unmatched_detections.push_back(j);
  }
  return out;
}

Tracker::Tracker(TrackerParams params) : params_(params) {
  ValidateTrackerParams(params_);
}

std::vector<PredictedBox> Tracker::Predict() {
  StateCovariance f = StateCovariance::Identity();
  f(0, 7) = f(1, 8) = f(2, 9) = params_.dt;
  StateCovariance q = StateCovariance::Zero();
  q.bottomRightCorner<3, 3>() =
      0.01 * params_.process_noise_scale * Eigen::Matrix3d::Identity();

  std::vector<PredictedBox> out;
  out.reserve(tracks_.size());
  for (auto& t : tracks_) {
    t.x = f * t.x;
    t.x(3) = NormalizeAngle(t.x(3));
    t.P = f * t.P * f.transpose() + q;
    t.P = 0.5 * (t.P + t.P.transpose());
    ++t.age_since_update;
    ++t.frames_alive;
    out.push_back({t.Box(), t.cls});
  }
  return out;
}

void Tracker::KalmanUpdate(TrackState& t, const Detection& det) const {
  using Meas = Eigen::Matrix<double, 7, 1>;
  Eigen::Matrix<double, 7, 10> h = Eigen::Matrix<double, 7, 10>::Zero();
  h.leftCols<7>().setIdentity();
  const Eigen::Matrix<double, 7, 7> r =
      0.01 * params_.measurement_noise_scale * Eigen::Matrix<double, 7, 7>::Identity();

  // Orientation correction: a heading flipped by pi describes the same box.
  const double predicted_yaw = NormalizeAngle(t.x(3));
  t.x(3) = predicted_yaw;
  double diff = NormalizeAngle(det.box.yaw - predicted_yaw);
  if (std::abs(diff) > kPi / 2.0) diff = NormalizeAngle(diff + kPi);

  Meas z;
  z << det.box.center, predicted_yaw + diff, det.box.length, det.box.width, det.box.height;
  const Meas innovation = z - h * t.x;
  const Eigen::Matrix<double, 7, 7> s = h * t.P * h.transpose() + r;
  const Eigen::Matrix<double, 10, 7> k =
      s.ldlt().solve(h * t.P).transpose();
  t.x += k * innovation;
  t.x(3) = NormalizeAngle(t.x(3));
  // Joseph form keeps P symmetric positive semi-definite.
  const StateCovariance ikh = StateCovariance::Identity() - k * h;
  t.P = ikh * t.P * ikh.transpose() + k * r * k.transpose();
  t.P = 0.5 * (t.P + t.P.transpose());
}

TrackState Tracker::Spawn(const Detection& det) {
  TrackState t;
  t.x << det.box.center, NormalizeAngle(det.box.yaw), det.box.length, det.box.width,
      det.box.height, 0.0, 0.0, 0.0;
  t.P = 10.0 * StateCovariance::Identity();
  t.P.bottomRightCorner<3, 3>() = 1000.0 * Eigen::Matrix3d::Identity();
  t.id = next_id_++;
  t.cls = det.cls;
  t.score = det.score;
  t.hits = 1;
  t.age_since_update = 0;
  t.frames_alive = 1;
  return t;
}

std::vector<TrackedObject> Tracker::Update(const Association& association,
                                           const std::vector<Detection>& detections) {
  ++frames_processed_;
  for (const auto& [ti, di] : association.matches) {
    TrackState& t = tracks_.at(ti);
    KalmanUpdate(t, detections.at(di));
    t.score = detections[di].score;
    ++t.hits;
    t.age_since_update = 0;
  }
  for (int di : association.unmatched_detections) {
    tracks_.push_back(Spawn(detections.at(di)));
  }
  std::erase_if(tracks_, [&](const TrackState& t) {
    return t.age_since_update > params_.max_age;
  });

  std::vector<TrackedObject> out;
  for (const auto& t : tracks_) {
    if (t.age_since_update != 0) continue;
    if (t.hits < params_.min_hits && t.frames_alive > params_.min_hits) continue;
    out.push_back({t.id, t.Box(), t.cls, t.score, t.Velocity()});
  }
  std::sort(out.begin(), out.end(),
            [](const TrackedObject& a, const TrackedObject& b) { return a.id < b.id; });
  return out;
}

std::vector<TrackedObject> Tracker::Step(const std::vector<Detection>& detections) {
  const auto predicted = Predict();
  return Update(Associate(predicted, detections, params_.iou_threshold), detections);
}

std::vector<std::vector<TrackedObject>> TrackSequence(
    const std::vector<std::vector<Detection>>& frames, const TrackerParams& params) {
  Tracker tracker(params);
  std::vector<std::vector<TrackedObject>> out;
  out.reserve(frames.size());
  for (const auto& dets : frames) out.push_back(tracker.Step(dets));
  return out;
}

}  // namespace coopsim
