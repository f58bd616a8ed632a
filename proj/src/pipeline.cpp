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

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "coopsim/kitti_io.hpp"
#include "coopsim/seed.hpp"
#include "json.hpp"

namespace coopsim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view ToString(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::kVehicleOnly: return "vehicle_only";
    case PipelineMode::kCooperative: return "cooperative";
    case PipelineMode::kBoth: return "both";
  }
  return "?";
}

std::optional<PipelineMode> ParsePipelineMode(std::string_view name) {
  if (name == "vehicle_only") return PipelineMode::kVehicleOnly;
  if (name == "cooperative") return PipelineMode::kCooperative;
  if (name == "both") return PipelineMode::kBoth;
  return std::nullopt;
}

// --- settings -------------------------------------------------------------

namespace {

[[noreturn]] void Fail(const YAML::Node& node, const std::string& path, const std::string& what) {
  std::string msg = "field '" + path + "'";
  if (node.IsDefined() && node.Mark().line >= 0) {
    msg += " (line " + std::to_string(node.Mark().line + 1) + ")";
  }
  throw ConfigError(msg + ": " + what);
}

class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (!node_.IsMap()) Fail(node_, name_, "expected a mapping");
  }

  template <typename T>
  void Read(const char* key, T& out) {
    keys_.push_back(key);
    const YAML::Node n = node_[key];
    if (!n.IsDefined() || n.IsNull()) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      Fail(n, name_ + "." + key, "wrong type");
    }
  }

  void Finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (std::find(keys_.begin(), keys_.end(), key) == keys_.end()) {
        Fail(kv.first, name_ + "." + key, "unknown field");
      }
    }
  }

 private:
  YAML::Node node_;
  std::string name_;
  std::vector<std::string> keys_;
};

template <typename Fn>
void Validated(const YAML::Node& node, const std::string& name, Fn&& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    Fail(node, name, e.what());
  }
}

}  // namespace

PipelineSettings ParsePipelineSettings(std::string_view yaml_text, double frame_dt) {
  PipelineSettings s;
  s.tracker.dt = frame_dt;
  s.pack.future_dt = frame_dt;
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid YAML: ") + e.what());
  }
  if (const YAML::Node n = root["detector"]; n.IsDefined() && !n.IsNull()) {
    Section sec(n, "detector");
    sec.Read("min_points", s.detector.min_points);
    sec.Read("center_noise_sigma", s.detector.center_noise_sigma);
    sec.Read("yaw_noise_sigma", s.detector.yaw_noise_sigma);
    sec.Read("dims_noise_sigma", s.detector.dims_noise_sigma);
    sec.Read("max_detect_range", s.detector.max_detect_range);
    sec.Read("score_saturation_points", s.detector.score_saturation_points);
    sec.Read("clutter_rate", s.detector.clutter_rate);
    sec.Read("surface_margin", s.detector.surface_margin);
    sec.Read("ground_clearance", s.detector.ground_clearance);
    sec.Finish();
    Validated(n, "detector", [&] { ValidateDetectorParams(s.detector); });
  }
  if (const YAML::Node n = root["tracker"]; n.IsDefined() && !n.IsNull()) {
    Section sec(n, "tracker");
    sec.Read("iou_threshold", s.tracker.iou_threshold);
    sec.Read("min_hits", s.tracker.min_hits);
    sec.Read("max_age", s.tracker.max_age);
    sec.Read("process_noise_scale", s.tracker.process_noise_scale);
    sec.Read("measurement_noise_scale", s.tracker.measurement_noise_scale);
    sec.Finish();
    Validated(n, "tracker", [&] { ValidateTrackerParams(s.tracker); });
  }
  if (const YAML::Node n = root["fusion"]; n.IsDefined() && !n.IsNull()) {
    Section sec(n, "fusion");
    std::string rule(ToString(s.fusion.keep_rule));
    sec.Read("dedup_iou_threshold", s.fusion.dedup_iou_threshold);
    sec.Read("keep_rule", rule);
    sec.Read("earliness_sustain", s.earliness_sustain);
    sec.Read("self_filter_iou", s.self_filter_iou);
    sec.Finish();
    const auto parsed = ParseKeepRule(rule);
    if (!parsed) Fail(n["keep_rule"], "fusion.keep_rule", "expected higher_score or weighted_average");
    s.fusion.keep_rule = *parsed;
    Validated(n, "fusion", [&] { ValidateFusionParams(s.fusion); });
    if (s.earliness_sustain < 1) Fail(n, "fusion.earliness_sustain", "must be >= 1");
  }
  if (const YAML::Node n = root["export"]; n.IsDefined() && !n.IsNull()) {
    Section sec(n, "export");
    sec.Read("point_decimation", s.pack.point_decimation);
    sec.Read("future_steps", s.pack.future_steps);
    sec.Finish();
    if (s.pack.point_decimation < 1) Fail(n, "export.point_decimation", "must be >= 1");
    if (s.pack.future_steps < 0) Fail(n, "export.future_steps", "must be >= 0");
  }
  return s;
}

PipelineSettings LoadPipelineSettings(const fs::path& scenario_path, double frame_dt) {
  std::ifstream in(scenario_path);
  if (!in) throw InputError("cannot open scenario " + scenario_path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParsePipelineSettings(ss.str(), frame_dt);
}

// --- simulation -----------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

Pose ParentPose(const ScenarioConfig& config, const SensorSpec& sensor, int frame) {
  if (sensor.parent == "world") return Pose::Identity();
  return ActorPose(config, sensor.parent, frame);
}

std::string_view IgnoredActor(const SensorSpec& sensor) {
  return sensor.parent == "world" ? std::string_view{} : std::string_view(sensor.parent);
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() +
                  (ec ? ": " + ec.message() : std::string()));
  }
}

template <typename Fn>
void WriteText(const fs::path& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void WriteString(const fs::path& path, const std::string& text) {
  WriteText(path, [&](std::ostream& out) { out << text; });
}

std::string TimingJson(const std::vector<TimingRecord>& records) {
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"frame", r.frame}, {"phase", std::string(ToString(r.phase))},
                    {"seconds", r.seconds}});
  }
  json j = json::parse(TimingReportJson(TimingReport(records)));
  j["records"] = std::move(recs);
  return j.dump(1) + "\n";
}

}  // namespace

SimFrame SimulateFrame(const ScenarioConfig& config, int frame) {
  SimFrame out;
  out.frame = frame;
  out.world = StepWorld(config, frame);
  out.sensors.reserve(config.sensors.size());
  for (const auto& s : config.sensors) {
    SensorFrame sf;
    sf.sensor_id = s.id;
    sf.roadside = config.IsRoadsideSensor(s);
    sf.parent_pose = ParentPose(config, s, frame);
    sf.pose = Compose(sf.parent_pose, s.mount);
    sf.cloud = Scan(sf.pose, s.lidar, out.world, DeriveSeed(config.seed, "lidar/" + s.id, frame),
                    s.id, IgnoredActor(s));
    out.sensors.push_back(std::move(sf));
  }
  return out;
}

std::vector<TruthBox> TruthTargets(const WorldSnapshot& world) {
  std::vector<TruthBox> out;
  for (const auto& a : world.actors) {
    if (a.is_ego) continue;
    const auto cls = ClassOf(a.kind);
    if (!cls) continue;
    out.push_back({a.id, *cls, a.box});
  }
  return out;
}

std::vector<TimingRecord> RunSimulate(const ScenarioConfig& config, const fs::path& out) {
  ValidateScenario(config);
  EnsureDir(out);
  for (const auto& s : config.sensors) {
    EnsureDir(out / s.id / "velodyne_points" / "data");
    EnsureDir(out / s.id / "oxts" / "data");
    EnsureDir(out / s.id / "label");
    WriteText(out / s.id / "calib.txt", [](std::ostream& o) { kitti::WriteCalib(o); });
  }

  // Stable track ids: index among labelled actors in scenario order.
  std::vector<const ActorSpec*> labelled;
  for (const auto& a : config.actors) {
    if (ClassOf(a.kind)) labelled.push_back(&a);
  }
  std::map<std::string, std::vector<kitti::Tracklet>> tracklets;
  std::map<std::string, std::vector<kitti::LabelRecord>> labels;
  for (const auto& s : config.sensors) {
    auto& t = tracklets[s.id];
    for (const ActorSpec* a : labelled) {
      kitti::Tracklet tr;
      tr.object_type = std::string(ToString(*ClassOf(a->kind)));
      tr.l = a->dims.length;
      tr.w = a->dims.width;
      tr.h = a->dims.height;
      t.push_back(std::move(tr));
    }
  }

  std::vector<TimingRecord> timing;
  for (int f = 0; f < config.frame_count; ++f) {
    const auto t0 = Clock::now();
    const SimFrame sim = SimulateFrame(config, f);
    const auto t1 = Clock::now();
    for (std::size_t k = 0; k < sim.sensors.size(); ++k) {
      const SensorFrame& sf = sim.sensors[k];
      const fs::path root = out / sf.sensor_id;
      try {
        kitti::WriteVelodyneFile(sf.cloud, kitti::VelodynePath(root, f));
      } catch (const Error& e) {
        throw IoError(e.what());
      }
      WriteText(kitti::OxtsPath(root, f), [&](std::ostream& o) {
        kitti::WriteOxts(kitti::OxtsFromPose(config.geo_origin, sf.parent_pose), o);
      });
      const WorldSnapshot local = ToSensorFrame(sim.world, sf.pose, sf.sensor_id);
      for (std::size_t i = 0; i < labelled.size(); ++i) {
        const ActorSpec* a = labelled[i];
        if (a->id == config.sensors[k].parent) continue;
        const ActorBox* box = local.Find(a->id);
        if (!box) continue;
        auto& tr = tracklets[sf.sensor_id][i];
        if (tr.poses.empty()) tr.first_frame = f;
        tr.poses.push_back(kitti::BoxToTrackletPose(box->box));
        labels[sf.sensor_id].push_back(kitti::BoxToLabel(
            box->box, tr.object_type, f, static_cast<int>(i)));
      }
    }
    const auto t2 = Clock::now();
    timing.push_back({f, Phase::kSimulate, Seconds(t0, t1)});
    timing.push_back({f, Phase::kSaveDisk, Seconds(t1, t2)});
    timing.push_back({f, Phase::kTotal, Seconds(t0, t2)});
  }

  for (const auto& s : config.sensors) {
    std::vector<kitti::Tracklet> present;
    for (auto& t : tracklets[s.id]) {
      if (!t.poses.empty()) present.push_back(t);
    }
    WriteText(out / s.id / "tracklet_labels.xml",
              [&](std::ostream& o) { kitti::WriteTracklets(present, o); });
    WriteText(kitti::LabelPath(out / s.id),
              [&](std::ostream& o) { kitti::WriteLabels(labels[s.id], o); });
  }
  WriteString(out / "timing.json", TimingJson(timing));
  return timing;
}

// --- pipeline -------------------------------------------------------------

namespace {

struct SensorRoles {
  const SensorSpec* vehicle = nullptr;
  std::vector<const SensorSpec*> roadside;
};

SensorRoles ResolveSensors(const ScenarioConfig& config) {
  SensorRoles roles;
  const std::string& ego = config.Ego().id;
  for (const auto& s : config.sensors) {
    if (config.IsRoadsideSensor(s)) {
      roles.roadside.push_back(&s);
    } else if (s.parent == ego) {
      if (roles.vehicle) throw ConfigError("more than one sensor mounted on the ego");
      roles.vehicle = &s;
    } else {
      throw ConfigError("sensor '" + s.id + "' is on moving actor '" + s.parent +
                        "'; only the ego and static actors may carry sensors");
    }
  }
  if (!roles.vehicle) throw ConfigError("pipeline needs a sensor mounted on the ego");
  return roles;
}

using LabelsByFrame = std::map<int, std::vector<kitti::LabelRecord>>;

LabelsByFrame LoadExternalLabels(const fs::path& dir, const std::string& sensor_id) {
  const fs::path path = kitti::LabelPath(dir / sensor_id);
  std::ifstream in(path);
  if (!in) throw InputError("missing external labels " + path.string());
  LabelsByFrame out;
  try {
    for (auto& r : kitti::ReadLabels(in)) out[r.frame].push_back(std::move(r));
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return out;
}

SensorFrame LoadSensorFrame(const fs::path& dir, const ScenarioConfig& config,
                            const SensorSpec& s, int frame) {
  const fs::path root = dir / s.id;
  SensorFrame sf;
  sf.sensor_id = s.id;
  sf.roadside = config.IsRoadsideSensor(s);
  try {
    std::ifstream oxts(kitti::OxtsPath(root, frame));
    if (!oxts) throw InputError("missing " + kitti::OxtsPath(root, frame).string());
    sf.parent_pose = kitti::PoseFromOxts(config.geo_origin, kitti::ReadOxts(oxts));
    sf.cloud = kitti::ReadVelodyneFile(kitti::VelodynePath(root, frame), s.id);
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  sf.pose = Compose(sf.parent_pose, s.mount);
  return sf;
}

SensorRegistration Registration(const SensorSpec& s, const SensorFrame& sf) {
  if (sf.roadside) return {s.id, SensorRole::kRoadside, s.mount, sf.parent_pose};
  return {s.id, SensorRole::kVehicle, s.mount, {}};
}

}  // namespace

PipelineResult RunPipeline(const ScenarioConfig& config, const PipelineSettings& settings,
                           const PipelineOptions& options) {
  ValidateScenario(config);
  ValidateDetectorParams(settings.detector);
  ValidateTrackerParams(settings.tracker);
  ValidateFusionParams(settings.fusion);
  const SensorRoles roles = ResolveSensors(config);
  const bool run_vehicle = options.mode != PipelineMode::kCooperative;
  const bool run_coop = options.mode != PipelineMode::kVehicleOnly;

  std::map<std::string, LabelsByFrame> external;
  if (options.labels_dir) {
    external[roles.vehicle->id] = LoadExternalLabels(*options.labels_dir, roles.vehicle->id);
    if (run_coop) {
      for (const SensorSpec* s : roles.roadside) {
        external[s->id] = LoadExternalLabels(*options.labels_dir, s->id);
      }
    }
  }

  PipelineResult r;
  r.scenario = config.name;
  r.seed = config.seed;
  r.frame_count = config.frame_count;
  r.mode = options.mode;
  std::optional<Tracker> vehicle_tracker, fused_tracker;
  if (run_vehicle) vehicle_tracker.emplace(settings.tracker);
  if (run_coop) fused_tracker.emplace(settings.tracker);
  ModeResult* vehicle_mode = run_vehicle ? &r.modes["vehicle_only"] : nullptr;
  ModeResult* coop_mode = run_coop ? &r.modes["cooperative"] : nullptr;

  for (int f = 0; f < config.frame_count; ++f) {
    const auto t0 = Clock::now();
    SimFrame sim;
    if (options.input_dir) {
      sim.frame = f;
      sim.world = StepWorld(config, f);
      for (const auto& s : config.sensors) {
        if (!run_coop && config.IsRoadsideSensor(s)) continue;
        sim.sensors.push_back(LoadSensorFrame(*options.input_dir, config, s, f));
      }
    } else {
      sim = SimulateFrame(config, f);
    }
    const auto t1 = Clock::now();

    // Perception per sensor, then into the global frame.
    const ActorBox* ego = sim.world.Find(config.Ego().id);
    std::vector<Detection> vehicle_dets, roadside_dets;
    std::vector<std::vector<Detection>> roadside_lists;
    const SensorFrame* vehicle_frame = nullptr;
    const SensorFrame* roadside_frame = nullptr;
    for (const auto& sf : sim.sensors) {
      if (sf.roadside && !run_coop) continue;
      const SensorSpec& spec = *config.FindSensor(sf.sensor_id);
      const std::string source = sf.roadside ? "roadside" : "vehicle";
      std::vector<Detection> local;
      if (options.labels_dir) {
        const auto& by_frame = external.at(sf.sensor_id);
        const auto it = by_frame.find(f);
        if (it != by_frame.end()) local = IngestExternal(it->second, source).detections;
      } else {
        const WorldSnapshot truth = ToSensorFrame(sim.world, sf.pose, sf.sensor_id);
        local = Detect(sf.cloud, truth, settings.detector,
                       DeriveSeed(config.seed, "detect/" + sf.sensor_id, f), source);
      }
      if (sf.roadside) {
        auto global = RemoveSelf(ToGlobal(local, Registration(spec, sf), std::nullopt),
                                 ego->box, settings.self_filter_iou);
        roadside_dets.insert(roadside_dets.end(), global.begin(), global.end());
        roadside_lists.push_back(std::move(global));
        if (!roadside_frame) roadside_frame = &sf;
      } else {
        vehicle_dets = ToGlobal(local, Registration(spec, sf), sf.parent_pose);
        vehicle_frame = &sf;
      }
    }
    SortDetections(vehicle_dets);
    SortDetections(roadside_dets);
    const auto t2 = Clock::now();

    std::vector<Detection> fused;
    if (run_coop) {
      fused = vehicle_dets;
      for (const auto& list : roadside_lists) fused = Merge(fused, list, settings.fusion);
      SortDetections(fused);
    }
    const auto t3 = Clock::now();

    std::vector<TrackedObject> vehicle_tracks, fused_tracks;
    if (vehicle_tracker) vehicle_tracks = vehicle_tracker->Step(vehicle_dets);
    if (fused_tracker) fused_tracks = fused_tracker->Step(fused);
    const auto t4 = Clock::now();

    const auto truth = TruthTargets(sim.world);
    r.truth.push_back(truth);
    r.vehicle_metrics.push_back(MatchToTruth(vehicle_dets, truth, f));
    if (run_coop) r.roadside_metrics.push_back(MatchToTruth(roadside_dets, truth, f));
    if (vehicle_mode) {
      vehicle_mode->detections.push_back(vehicle_dets);
      vehicle_mode->tracks.push_back(vehicle_tracks);
      vehicle_mode->metrics.push_back(r.vehicle_metrics.back());
    }
    if (coop_mode) {
      coop_mode->detections.push_back(fused);
      coop_mode->tracks.push_back(fused_tracks);
      coop_mode->metrics.push_back(MatchToTruth(fused, truth, f));
    }

    stream::FrameArtifacts art;
    art.frame = f;
    art.timestamp = f * config.frame_dt;
    art.vehicle_pose = ego->pose;
    art.vehicle_cloud = std::pair{vehicle_frame->cloud, vehicle_frame->pose};
    art.vehicle_detections = vehicle_dets;
    if (run_vehicle) art.vehicle_tracks = vehicle_tracks;
    if (run_coop) {
      if (roadside_frame) art.roadside_cloud = std::pair{roadside_frame->cloud, roadside_frame->pose};
      art.roadside_detections = roadside_dets;
      art.fused_detections = fused;
      art.fused_tracks = fused_tracks;
    }
    art.truth = truth;
    r.bundles.push_back(stream::PackFrame(art, settings.pack));
    r.vehicle_detections.push_back(std::move(vehicle_dets));
    r.roadside_detections.push_back(std::move(roadside_dets));
    const auto t5 = Clock::now();

    r.timing.push_back({f, Phase::kSimulate, Seconds(t0, t1)});
    r.timing.push_back({f, Phase::kPerceive, Seconds(t1, t2)});
    if (run_coop) r.timing.push_back({f, Phase::kFuse, Seconds(t2, t3)});
    r.timing.push_back({f, Phase::kTrack, Seconds(t3, t4)});
    r.timing.push_back({f, Phase::kTotal, Seconds(t0, t5)});
  }

  for (auto& [name, m] : r.modes) {
    std::vector<std::vector<TruthBox>> truth = r.truth;
    m.mot = ComputeMot(m.tracks, truth);
  }

  if (options.mode == PipelineMode::kBoth) {
    std::set<std::string> targets;
    for (const auto& frame : r.truth) {
      for (const auto& t : frame) targets.insert(t.id);
    }
    const auto& v = r.modes.at("vehicle_only").metrics;
    const auto& c = r.modes.at("cooperative").metrics;
    for (const auto& id : targets) {
      TargetEarliness e;
      e.vehicle_first = FirstDetection(v, id, settings.earliness_sustain);
      e.fused_first = FirstDetection(c, id, settings.earliness_sustain);
      e.earliness = Earliness(v, c, id, settings.earliness_sustain);
      r.earliness[id] = e;
    }
  }

  r.manifest = stream::BuildManifest(config.name, config.frame_dt, r.bundles,
                                     LanePolylines(config.road));
  return r;
}

// --- outputs --------------------------------------------------------------

namespace {

json OptInt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

json MetricsArray(const std::vector<FrameMetrics>& metrics) {
  json frames = json::array();
  for (const auto& m : metrics) {
    frames.push_back({{"frame", m.frame},
                      {"tp", m.true_positives},
                      {"fp", m.false_positives},
                      {"fn", m.false_negatives},
                      {"precision", m.Precision()},
                      {"recall", m.Recall()},
                      {"matched", m.matched_ids}});
  }
  return frames;
}

json Summary(const std::vector<FrameMetrics>& metrics) {
  FrameMetrics total;
  for (const auto& m : metrics) {
    total.true_positives += m.true_positives;
    total.false_positives += m.false_positives;
    total.false_negatives += m.false_negatives;
  }
  return {{"tp", total.true_positives},
          {"fp", total.false_positives},
          {"fn", total.false_negatives},
          {"precision", total.Precision()},
          {"recall", total.Recall()}};
}

}  // namespace

std::string MetricsJson(const PipelineResult& r) {
  json pipelines = json::object();
  for (const auto& [name, m] : r.modes) {
    pipelines[name] = {{"frames", MetricsArray(m.metrics)},
                       {"summary", Summary(m.metrics)},
                       {"mot",
                        {{"frames", m.mot.frames},
                         {"ground_truth", m.mot.ground_truth},
                         {"matches", m.mot.matches},
                         {"false_positives", m.mot.false_positives},
                         {"misses", m.mot.misses},
                         {"id_switches", m.mot.id_switches},
                         {"mota", m.mot.Mota()}}}};
  }
  json visibility = json::array();
  for (std::size_t f = 0; f < r.truth.size(); ++f) {
    json targets = json::object();
    for (const auto& t : r.truth[f]) {
      json row = {{"vehicle", r.vehicle_metrics[f].Matched(t.id)}};
      if (!r.roadside_metrics.empty()) row["roadside"] = r.roadside_metrics[f].Matched(t.id);
      if (const auto it = r.modes.find("cooperative"); it != r.modes.end()) {
        row["fused"] = it->second.metrics[f].Matched(t.id);
      }
      targets[t.id] = std::move(row);
    }
    visibility.push_back({{"frame", static_cast<int>(f)}, {"targets", std::move(targets)}});
  }
  const json j = {{"scenario", r.scenario},
                  {"seed", r.seed},
                  {"frame_count", r.frame_count},
                  {"mode", std::string(ToString(r.mode))},
                  {"pipelines", std::move(pipelines)},
                  {"visibility", std::move(visibility)}};
  return j.dump(1) + "\n";
}

std::string EarlinessJson(const PipelineResult& r) {
  json targets = json::object();
  for (const auto& [id, e] : r.earliness) {
    targets[id] = {{"vehicle_first_frame", OptInt(e.vehicle_first)},
                   {"fused_first_frame", OptInt(e.fused_first)},
                   {"earliness_frames", OptInt(e.earliness)}};
  }
  return json{{"scenario", r.scenario}, {"seed", r.seed}, {"targets", std::move(targets)}}.dump(1) +
         "\n";
}

void WritePipelineOutputs(const PipelineResult& r, const fs::path& out) {
  EnsureDir(out);
  WriteString(out / "metrics.json", MetricsJson(r));
  if (r.mode == PipelineMode::kBoth) WriteString(out / "earliness.json", EarlinessJson(r));

  for (const auto& [name, m] : r.modes) {
    std::vector<kitti::LabelRecord> labels;
    for (std::size_t f = 0; f < m.tracks.size(); ++f) {
      for (const auto& t : m.tracks[f]) {
        Detection d{t.box, t.cls, t.score, name};
        labels.push_back(DetectionToLabel(d, static_cast<int>(f), t.id));
        // Global frame: there is no camera to project into.
        labels.back().bbox = {-1.0, -1.0, -1.0, -1.0};
      }
    }
    const fs::path root = out / "tracks" / name;
    EnsureDir(root / "label");
    WriteText(kitti::LabelPath(root), [&](std::ostream& o) { kitti::WriteLabels(labels, o); });
  }

  const auto t0 = Clock::now();
  try {
    stream::WriteScene(r.bundles, r.manifest, out / "scene");
  } catch (const Error& e) {
    throw IoError(e.what());
  }
  std::vector<TimingRecord> timing = r.timing;
  const double per_frame = r.bundles.empty() ? 0.0 : Seconds(t0, Clock::now()) / r.bundles.size();
  for (int f = 0; f < r.frame_count; ++f) timing.push_back({f, Phase::kSaveDisk, per_frame});
  WriteString(out / "timing.json", TimingJson(timing));
  WriteString(out / "timing.txt", FormatTimingTable(TimingReport(timing)));
}

}  // namespace coopsim
