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
#include "coopsim/tracking.hpp"

namespace coopsim {

struct TruthBox {
  std::string id;
  ObjectClass cls = ObjectClass::kCar;
  Box3D box;
};

struct FrameMetrics {
  int frame = 0;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  std::vector<std::string> truth_ids;    ///< sorted
  std::vector<std::string> matched_ids;  ///< sorted subset of truth_ids

  double Precision() const;
  double Recall() const;
  bool Matched(std::string_view id) const;
  bool Present(std::string_view id) const;
};

/// Greedy one-to-one matching by descending IoU3D, same class only.
FrameMetrics MatchToTruth(const std::vector<Detection>& detections,
                          const std::vector<TruthBox>& truth, int frame,
                          double iou_threshold = 0.5);

/// First frame index at which `target` is matched for `sustain` consecutive
/// frames, or nullopt.
std::optional<int> FirstDetection(const std::vector<FrameMetrics>& metrics,
                                  std::string_view target, int sustain = 1);

/// Vehicle-only first detection minus fused first detection. A pipeline that
/// never detects the target counts as first detecting it at frame_count.
/// nullopt when neither does; throws if the target never appears in truth.
std::optional<int> Earliness(const std::vector<FrameMetrics>& vehicle_only,
                             const std::vector<FrameMetrics>& fused,
                             std::string_view target, int sustain = 1);

enum class Phase { kSimulate, kSaveDisk, kPerceive, kFuse, kTrack, kTotal };

std::string_view ToString(Phase phase);

struct TimingRecord {
  int frame = 0;
  Phase phase = Phase::kTotal;
  double seconds = 0.0;
};

struct PhaseSummary {
  Phase phase = Phase::kTotal;
  int count = 0;
  double mean = 0.0;
  double max = 0.0;
};

/// One row per phase present, in Phase order.
std::vector<PhaseSummary> TimingReport(const std::vector<TimingRecord>& records);
std::string FormatTimingTable(const std::vector<PhaseSummary>& report);
std::string TimingReportJson(const std::vector<PhaseSummary>& report);

struct MotMetrics {
  int frames = 0;
  int ground_truth = 0;
  int matches = 0;
  int false_positives = 0;
  int misses = 0;
  int id_switches = 0;

  double Mota() const;
};

/// CLEAR-MOT style counts with greedy per-frame matching at `iou_threshold`.
MotMetrics ComputeMot(const std::vector<std::vector<TrackedObject>>& tracks,
                      const std::vector<std::vector<TruthBox>>& truth,
                      double iou_threshold = 0.5);

}  // namespace coopsim
