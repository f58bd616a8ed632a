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

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "coopsim/geometry.hpp"
#include "coopsim/perception.hpp"

namespace coopsim {

struct TrackerParams {
  double iou_threshold = 0.1;
  int min_hits = 3;
  int max_age = 2;
  double dt = 0.1;
  /// Scales Q = 0.01 * I on the velocity block.
  double process_noise_scale = 1.0;
  /// Scales R = 0.01 * I on the 7 measured components.
  double measurement_noise_scale = 1.0;
};

void ValidateTrackerParams(const TrackerParams& params);

using StateVector = Eigen::Matrix<double, 10, 1>;
using StateCovariance = Eigen::Matrix<double, 10, 10>;

/// State layout: x y z yaw l w h vx vy vz.
struct TrackState {
  StateVector x = StateVector::Zero();
  StateCovariance P = StateCovariance::Identity();
  int id = 0;
  ObjectClass cls = ObjectClass::kCar;
  double score = 0.0;
  int hits = 0;
  int age_since_update = 0;
  int frames_alive = 0;

  Box3D Box() const;
  Vec3 Velocity() const { return x.segment<3>(7); }
};

struct PredictedBox {
  Box3D box;
  ObjectClass cls = ObjectClass::kCar;
};

struct Association {
  std::vector<std::pair<int, int>> matches;  ///< (track index, detection index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
};

/// Per-class Hungarian on 1 - IoU3D; pairs below `iou_threshold` are split
/// back into the unmatched lists.
Association Associate(const std::vector<PredictedBox>& predicted,
                      const std::vector<Detection>& detections,
                      double iou_threshold);

struct TrackedObject {
  int id = 0;
  Box3D box;
  ObjectClass cls = ObjectClass::kCar;
  double score = 0.0;
  Vec3 velocity = Vec3::Zero();
};

/// Constant-velocity 3D Kalman tracker with Hungarian association. Not
/// thread-safe; use one instance per pipeline.
class Tracker {
 public:
  explicit Tracker(TrackerParams params = {});

  /// Advances every live track by dt. Output is index-aligned with tracks().
  std::vector<PredictedBox> Predict();

  /// Applies one frame of associations, spawns and retires tracks, and
  /// returns the tracks reported this frame ordered by id.
  std::vector<TrackedObject> Update(const Association& association,
                                    const std::vector<Detection>& detections);

  /// Predict, associate and update in one call.
  std::vector<TrackedObject> Step(const std::vector<Detection>& detections);

  const std::vector<TrackState>& tracks() const { return tracks_; }
  const TrackerParams& params() const { return params_; }
  int frames_processed() const { return frames_processed_; }

 private:
  void KalmanUpdate(TrackState& track, const Detection& det) const;
  TrackState Spawn(const Detection& det);

  TrackerParams params_;
  std::vector<TrackState> tracks_;
  int next_id_ = 0;
  int frames_processed_ = 0;
};

/// Runs a fresh tracker over an ordered sequence of per-frame detections.
std::vector<std::vector<TrackedObject>> TrackSequence(
    const std::vector<std::vector<Detection>>& frames, const TrackerParams& params);

}  // namespace coopsim
