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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopsim/evaluation.hpp"
#include "coopsim/fusion.hpp"
#include "coopsim/lidar_sim.hpp"
#include "coopsim/perception.hpp"
#include "coopsim/scenario.hpp"
#include "coopsim/stream_export.hpp"
#include "coopsim/tracking.hpp"

namespace coopsim {

/// Raised for missing or unreadable pipeline inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Raised when outputs cannot be written.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class PipelineMode { kVehicleOnly, kCooperative, kBoth };

std::string_view ToString(PipelineMode mode);
std::optional<PipelineMode> ParsePipelineMode(std::string_view name);

/// Optional `detector`, `tracker`, `fusion` and `export` sections of a
/// scenario file.
struct PipelineSettings {
  DetectorParams detector;
  TrackerParams tracker;
  FusionParams fusion;
  int earliness_sustain = 1;
  double self_filter_iou = 0.1;
  stream::PackOptions pack{4, 10, 0.1};
};

/// Parses the pipeline sections of a scenario document. Tracker dt and the
/// future polyline step default to `frame_dt`.
PipelineSettings ParsePipelineSettings(std::string_view yaml_text, double frame_dt);
PipelineSettings LoadPipelineSettings(const std::filesystem::path& scenario_path,
                                      double frame_dt);

struct SensorFrame {
  std::string sensor_id;
  bool roadside = false;
  Pose pose;         ///< sensor in the global frame
  Pose parent_pose;  ///< carrier (ego, mast or world) in the global frame
  PointCloud cloud;  ///< sensor frame
};

struct SimFrame {
  int frame = 0;
  WorldSnapshot world;
  std::vector<SensorFrame> sensors;  ///< scenario order
};

/// World step plus one LiDAR sweep per sensor.
SimFrame SimulateFrame(const ScenarioConfig& config, int frame);

/// Writes the KITTI-style tree per sensor plus timing.json under `out`.
/// Returns simulate, save_disk and total records per frame.
std::vector<TimingRecord> RunSimulate(const ScenarioConfig& config,
                                      const std::filesystem::path& out);

/// Ground-truth targets (detectable, non-ego actors) in the global frame.
std::vector<TruthBox> TruthTargets(const WorldSnapshot& world);

struct PipelineOptions {
  PipelineMode mode = PipelineMode::kBoth;
  /// External detections: <labels_dir>/<sensor_id>/label/0000.txt.
  std::optional<std::filesystem::path> labels_dir;
  /// Output of a previous simulate run; clouds and carrier poses are read
  /// from it instead of being simulated.
  std::optional<std::filesystem::path> input_dir;
};

struct ModeResult {
  std::vector<std::vector<Detection>> detections;  ///< per frame, global
  std::vector<std::vector<TrackedObject>> tracks;
  std::vector<FrameMetrics> metrics;
  MotMetrics mot;
};

struct TargetEarliness {
  std::optional<int> vehicle_first;
  std::optional<int> fused_first;
  std::optional<int> earliness;
};

struct PipelineResult {
  std::string scenario;
  std::uint64_t seed = 0;
  int frame_count = 0;
  PipelineMode mode = PipelineMode::kBoth;
  std::vector<std::vector<TruthBox>> truth;
  /// Per-source detections in the global frame, after the ego self-filter.
  std::vector<std::vector<Detection>> vehicle_detections;
  std::vector<std::vector<Detection>> roadside_detections;
  /// Matched-to-truth ids per source and frame, for the visibility table.
  std::vector<FrameMetrics> vehicle_metrics;
  std::vector<FrameMetrics> roadside_metrics;
  std::map<std::string, ModeResult> modes;  ///< keyed by "vehicle_only"/"cooperative"
  std::map<std::string, TargetEarliness> earliness;  ///< mode both only
  std::vector<TimingRecord> timing;
  std::vector<stream::FrameBundle> bundles;
  stream::SceneManifest manifest;
};

PipelineResult RunPipeline(const ScenarioConfig& config, const PipelineSettings& settings,
                           const PipelineOptions& options);

/// metrics.json, earliness.json (mode both), timing.json/timing.txt, KITTI
/// track labels and the scene directory.
void WritePipelineOutputs(const PipelineResult& result, const std::filesystem::path& out);

std::string MetricsJson(const PipelineResult& result);
std::string EarlinessJson(const PipelineResult& result);

}  // namespace coopsim
