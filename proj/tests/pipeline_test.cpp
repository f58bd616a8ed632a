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

#include "coopsim/pipeline.hpp"

#include <array>
#include <fstream>

#include "coopsim/kitti_io.hpp"
#include "doctest.h"
#include "json.hpp"
#include "temp_dir.hpp"

namespace coopsim {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

const fs::path kScenarios = fs::path(COOPSIM_SOURCE_DIR) / "scenarios";

ScenarioConfig Intersection(int frames) {
  ScenarioConfig c = LoadScenarioFile(kScenarios / "occluded_intersection.yaml");
  c.frame_count = frames;
  return c;
}

PipelineSettings Settings(const ScenarioConfig& c) {
  return LoadPipelineSettings(kScenarios / "occluded_intersection.yaml", c.frame_dt);
}

std::size_t CountFiles(const fs::path& dir) {
  return static_cast<std::size_t>(
      std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

TEST_CASE("pipeline settings") {
  SUBCASE("defaults") {
    const auto s = ParsePipelineSettings("name: x\n", 0.05);
    CHECK(s.tracker.dt == 0.05);
    CHECK(s.pack.future_dt == 0.05);
    CHECK(s.tracker.min_hits == 3);
    CHECK(s.fusion.keep_rule == KeepRule::kHigherScore);
    CHECK(s.detector.min_points == 20);
  }
  SUBCASE("sections") {
    const auto s = ParsePipelineSettings(
        "detector:\n  min_points: 5\n  clutter_rate: 0.5\n"
        "tracker:\n  max_age: 4\n"
        "fusion:\n  keep_rule: weighted_average\n  earliness_sustain: 3\n"
        "export:\n  point_decimation: 2\n",
        0.1);
    CHECK(s.detector.min_points == 5);
    CHECK(s.detector.clutter_rate == 0.5);
    CHECK(s.tracker.max_age == 4);
    CHECK(s.fusion.keep_rule == KeepRule::kWeightedAverage);
    CHECK(s.earliness_sustain == 3);
    CHECK(s.pack.point_decimation == 2);
  }
  SUBCASE("errors name field and line") {
    CHECK_THROWS_WITH_AS(ParsePipelineSettings("tracker:\n  max_ages: 4\n", 0.1),
                         doctest::Contains("tracker.max_ages' (line 2)"), ConfigError);
    CHECK_THROWS_WITH_AS(ParsePipelineSettings("fusion:\n  keep_rule: best\n", 0.1),
                         doctest::Contains("fusion.keep_rule"), ConfigError);
    CHECK_THROWS_WITH_AS(ParsePipelineSettings("detector:\n  min_points: -1\n", 0.1),
                         doctest::Contains("detector"), ConfigError);
    CHECK_THROWS_AS(ParsePipelineSettings("tracker:\n  min_hits: lots\n", 0.1), ConfigError);
  }
  SUBCASE("mode names") {
    CHECK(ParsePipelineMode("both") == PipelineMode::kBoth);
    CHECK_FALSE(ParsePipelineMode("all").has_value());
  }
}

TEST_CASE("simulate writes the KITTI tree") {
  TempDir dir("simulate");
  const auto config = Intersection(50);
  const auto timing = RunSimulate(config, dir.path);
  CHECK(timing.size() == 150);
  for (const auto& s : config.sensors) {
    const fs::path root = dir.path / s.id;
    CHECK(CountFiles(root / "velodyne_points" / "data") == 50);
    CHECK(CountFiles(root / "oxts" / "data") == 50);
    CHECK(fs::exists(root / "calib.txt"));
    std::ifstream labels(kitti::LabelPath(root));
    const auto records = kitti::ReadLabels(labels);
    CHECK(records.size() >= 50);
    CHECK(records.back().frame == 49);
    std::ifstream xml(root / "tracklet_labels.xml");
    CHECK_FALSE(kitti::ReadTracklets(xml).empty());
  }
  // Vehicle oxts holds the ego pose.
  std::ifstream oxts(kitti::OxtsPath(dir.path / "vehicle_lidar", 10));
  const Pose p = kitti::PoseFromOxts(config.geo_origin, kitti::ReadOxts(oxts));
  CHECK((p.position - ActorPose(config, config.Ego().id, 10).position).norm() < 1e-6);
  CHECK(fs::exists(dir.path / "timing.json"));
}

TEST_CASE("pipeline modes") {
  const auto config = Intersection(30);
  const auto settings = Settings(config);

  SUBCASE("vehicle_only has no roadside streams") {
    const auto r = RunPipeline(config, settings, {PipelineMode::kVehicleOnly, {}, {}});
    CHECK(r.modes.count("vehicle_only") == 1);
    CHECK(r.modes.count("cooperative") == 0);
    CHECK(r.earliness.empty());
    for (const auto& s : r.manifest.streams) {
      CHECK(s.path.rfind("/roadside", 0) != 0);
      CHECK(s.path.rfind("/fused", 0) != 0);
    }
    CHECK(r.manifest.Find("/vehicle/tracks") != nullptr);
  }
  SUBCASE("both reports earliness and recall dominance") {
    const auto r = RunPipeline(config, settings, {PipelineMode::kBoth, {}, {}});
    REQUIRE(r.earliness.count("oncoming") == 1);
    CHECK(r.earliness.at("oncoming").earliness.value_or(0) > 0);
    const auto& v = r.modes.at("vehicle_only").metrics;
    const auto& c = r.modes.at("cooperative").metrics;
    for (std::size_t f = 0; f < v.size(); ++f) CHECK(c[f].Recall() >= v[f].Recall());
    CHECK(r.manifest.Find("/fused/tracks") != nullptr);
    CHECK(r.manifest.Find("/roadside/lidar") != nullptr);
    const auto metrics = nlohmann::json::parse(MetricsJson(r));
    CHECK(metrics["visibility"].size() == 30);
  }
  SUBCASE("the ego is never reported as a target") {
    const auto r = RunPipeline(config, settings, {PipelineMode::kCooperative, {}, {}});
    const Box3D ego_box = StepWorld(config, 0).Find(config.Ego().id)->box;
    for (const auto& d : r.roadside_detections[0]) CHECK(Iou3d(d.box, ego_box) < 0.1);
  }
}

TEST_CASE("pipeline inputs") {
  TempDir dir("pipeline_inputs");
  const auto config = Intersection(20);
  const auto settings = Settings(config);
  RunSimulate(config, dir.path);

  SUBCASE("reading a simulate run matches the in-memory run") {
    const auto mem = RunPipeline(config, settings, {PipelineMode::kBoth, {}, {}});
    const auto disk = RunPipeline(config, settings, {PipelineMode::kBoth, {}, dir.path});
    CHECK(MetricsJson(mem) == MetricsJson(disk));
  }
  SUBCASE("external labels replace the detector") {
    // Ground-truth labels as detections: every target present is found.
    const auto r = RunPipeline(config, settings, {PipelineMode::kBoth, dir.path, {}});
    for (std::size_t f = 0; f < r.truth.size(); ++f) {
      const auto& c = r.modes.at("cooperative").metrics[f];
      CHECK(c.false_negatives == 0);
      CHECK(c.false_positives == 0);
      for (const auto& d : r.vehicle_detections[f]) CHECK(d.score == 1.0);
    }
    CHECK(r.earliness.at("oncoming").earliness == 0);
  }
  SUBCASE("missing labels") {
    fs::remove(kitti::LabelPath(dir.path / "roadside_lidar"));
    CHECK_THROWS_AS(RunPipeline(config, settings, {PipelineMode::kBoth, dir.path, {}}),
                    InputError);
    CHECK_NOTHROW(RunPipeline(config, settings, {PipelineMode::kVehicleOnly, dir.path, {}}));
  }
  SUBCASE("missing cloud") {
    fs::remove(kitti::VelodynePath(dir.path / "vehicle_lidar", 7));
    CHECK_THROWS_AS(RunPipeline(config, settings, {PipelineMode::kBoth, {}, dir.path}),
                    InputError);
  }
}

TEST_CASE("pipeline outputs") {
  TempDir dir("pipeline_outputs");
  const auto config = Intersection(15);
  const auto r = RunPipeline(config, Settings(config), {PipelineMode::kBoth, {}, {}});
  WritePipelineOutputs(r, dir.path);
  for (const char* name : {"metrics.json", "earliness.json", "timing.json", "timing.txt",
                           "scene/manifest.json", "scene/frames/000014.json",
                           "tracks/cooperative/label/0000.txt",
                           "tracks/vehicle_only/label/0000.txt"}) {
    CHECK_MESSAGE(fs::exists(dir.path / name), name);
  }
  const auto scene = stream::ReadScene(dir.path / "scene");
  CHECK(scene.bundles == r.bundles);
  std::ifstream tracks(dir.path / "tracks/cooperative/label/0000.txt");
  const auto labels = kitti::ReadLabels(tracks);
  REQUIRE_FALSE(labels.empty());
  CHECK(labels.front().track_id >= 0);
  CHECK(labels.front().score.has_value());
  CHECK(labels.front().bbox == std::array<double, 4>{-1.0, -1.0, -1.0, -1.0});
}

}  // namespace
}  // namespace coopsim
