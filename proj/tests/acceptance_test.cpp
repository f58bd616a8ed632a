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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "coopsim/evaluation.hpp"
#include "coopsim/geometry.hpp"
#include "coopsim/kitti_io.hpp"
#include "coopsim/pipeline.hpp"
#include "coopsim/tracking.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace {

namespace fs = std::filesystem;
using namespace coopsim;

const fs::path kSource(COOPSIM_SOURCE_DIR);

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit_s;  // <= 0 means no limit
  std::function<Outcome()> run;
};

// --- KITTI round trips ------------------------------------------------------

Outcome KittiRoundTrips() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> npts(0, 2000);
  std::uniform_int_distribution<std::uint32_t> bits;
  int cloud_failures = 0;
  for (int k = 0; k < 1000; ++k) {
    PointCloud c;
    c.frame = "velodyne";
    const int n = npts(rng);
    c.points.resize(n);
    for (auto& p : c.points) {
      // Arbitrary finite bit patterns exercise the byte layout, not just values.
      auto finite = [&] {
        float f;
        do {
          f = std::bit_cast<float>(bits(rng));
        } while (!std::isfinite(f));
        return f;
      };
      p = {finite(), finite(), finite(), finite()};
    }
    std::stringstream ss;
    kitti::WriteVelodyne(c, ss);
    const std::string bytes = ss.str();
    std::stringstream in(bytes);
    const PointCloud back = kitti::ReadVelodyne(in);
    std::stringstream again;
    kitti::WriteVelodyne(back, again);
    if (bytes.size() != 16u * n || again.str() != bytes) ++cloud_failures;
  }

  std::uniform_real_distribution<double> u(-50.0, 50.0), ang(-kPi, kPi), dim(0.3, 5.0);
  double label_err = 0.0;
  std::vector<kitti::LabelRecord> labels;
  for (int k = 0; k < 1000; ++k) {
    kitti::LabelRecord r;
    r.frame = k;
    r.track_id = k % 7;
    r.type = k % 2 ? "Car" : "Cyclist";
    r.truncated = std::abs(u(rng)) / 50.0;
    r.occluded = k % 4;
    r.alpha = ang(rng);
    r.bbox = {u(rng), u(rng), u(rng), u(rng)};
    r.height = dim(rng);
    r.width = dim(rng);
    r.length = dim(rng);
    r.location = Vec3(u(rng), u(rng), u(rng));
    r.rotation_y = ang(rng);
    if (k % 3 == 0) r.score = std::abs(u(rng)) / 50.0;
    labels.push_back(r);
  }
  std::stringstream ls;
  kitti::WriteLabels(labels, ls);
  const auto labels_back = kitti::ReadLabels(ls);
  bool labels_ok = labels_back.size() == labels.size();
  for (std::size_t i = 0; labels_ok && i < labels.size(); ++i) {
    const auto& a = labels[i];
    const auto& b = labels_back[i];
    labels_ok = a.frame == b.frame && a.track_id == b.track_id && a.type == b.type &&
                a.occluded == b.occluded && a.score.has_value() == b.score.has_value();
    double e = std::max({std::abs(a.truncated - b.truncated), std::abs(a.alpha - b.alpha),
                         std::abs(a.height - b.height), std::abs(a.width - b.width),
                         std::abs(a.length - b.length), (a.location - b.location).cwiseAbs().maxCoeff(),
                         std::abs(a.rotation_y - b.rotation_y)});
    for (int j = 0; j < 4; ++j) e = std::max(e, std::abs(a.bbox[j] - b.bbox[j]));
    if (a.score && b.score) e = std::max(e, std::abs(*a.score - *b.score));
    label_err = std::max(label_err, e);
  }

  double oxts_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    kitti::OxtsRecord r;
    for (auto& v : r.values) v = u(rng);
    r.values[0] = 49.0 + u(rng) / 1000.0;
    r.values[1] = 8.4 + u(rng) / 1000.0;
    for (int j = 25; j < 30; ++j) r.values[j] = std::round(std::abs(u(rng)));
    std::stringstream os;
    kitti::WriteOxts(r, os);
    const auto back = kitti::ReadOxts(os);
    for (int j = 0; j < 30; ++j) oxts_err = std::max(oxts_err, std::abs(r.values[j] - back.values[j]));
  }

  std::string fixture_error;
  try {
    std::ifstream xml(kSource / "tests/fixtures/tracklet_labels_2011_09_26_drive_0005.xml");
    if (kitti::ReadTracklets(xml).empty()) fixture_error = "no tracklets";
    std::ifstream oxts(kSource / "tests/fixtures/oxts_2011_09_26_drive_0005_0000000000.txt");
    kitti::ReadOxts(oxts);
    std::ifstream lab(kSource / "tests/fixtures/tracking_label_0000.txt");
    const auto recs = kitti::ReadLabels(lab);
    if (std::none_of(recs.begin(), recs.end(), [](const auto& r) { return r.type == "Car"; })) {
      fixture_error = "no Car label";
    }
  } catch (const std::exception& e) {
    fixture_error = e.what();
  }

  const bool pass = cloud_failures == 0 && labels_ok && label_err <= 1e-6 && oxts_err <= 1e-6 &&
                    fixture_error.empty();
  return {pass, fmt::format("cloud mismatches {}/1000, label max err {:.2e}, oxts max err {:.2e}, "
                            "fixtures {}",
                            cloud_failures, label_err, oxts_err,
                            fixture_error.empty() ? "ok" : fixture_error)};
}

// --- geometry oracles ---------------------------------------------------------

Outcome GeometryOracles() {
  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> u(-1.5, 1.5), d(0.5, 4.0), ang(-kPi, kPi);
  double worst = 0.0;
  int iou_fail = 0;
  for (int k = 0; k < 100; ++k) {
    Box3D a, b;
    for (Box3D* box : {&a, &b}) {
      box->center = Vec3(u(rng), u(rng), u(rng) / 3.0);
      box->length = d(rng);
      box->width = d(rng);
      box->height = d(rng);
      box->yaw = ang(rng);
    }
    auto oracle = [](const Box3D& x) {
      return testing::OracleBox{x.center.x(), x.center.y(), x.center.z(),
                                x.length,     x.width,      x.height, x.yaw};
    };
    const double err =
        std::abs(Iou3d(a, b) - testing::MonteCarloIou3d(oracle(a), oracle(b), 1'000'000, k));
    worst = std::max(worst, err);
    if (err > 0.02) ++iou_fail;
  }

  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> val(-5.0, 10.0);
  int hung_fail = 0;
  for (int k = 0; k < 1000; ++k) {
    Eigen::MatrixXd c(dim(rng), dim(rng));
    for (int i = 0; i < c.size(); ++i) c.data()[i] = val(rng);
    const auto r = Hungarian(c);
    double total = 0.0;
    std::set<int> rows, cols;
    for (const auto& [i, j] : r) {
      total += c(i, j);
      rows.insert(i);
      cols.insert(j);
    }
    const auto expect = static_cast<std::size_t>(std::min(c.rows(), c.cols()));
    if (r.size() != expect || rows.size() != expect || cols.size() != expect ||
        std::abs(total - testing::BruteForceMinCost(c)) > 1e-9) {
      ++hung_fail;
    }
  }
  return {iou_fail == 0 && hung_fail == 0,
          fmt::format("iou3d worst |err| {:.4f} (limit 0.02, {} over), hungarian mismatches {}/1000",
                      worst, iou_fail, hung_fail)};
}

// --- tracker ----------------------------------------------------------------

Detection CarAt(double x, double y, double yaw = 0.0) {
  Detection d;
  d.box.center = Vec3(x, y, 0.75);
  d.box.length = 4.0;
  d.box.width = 1.8;
  d.box.height = 1.5;
  d.box.yaw = yaw;
  d.score = 0.9;
  d.source = "acceptance";
  return d;
}

bool Psd(const Tracker& t, double& min_eig) {
  bool ok = true;
  for (const auto& s : t.tracks()) {
    Eigen::SelfAdjointEigenSolver<StateCovariance> es(s.P);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    ok = ok && (s.P - s.P.transpose()).cwiseAbs().maxCoeff() <= 1e-9 &&
         es.eigenvalues().minCoeff() >= -1e-9;
  }
  return ok;
}

Outcome TrackerProperties() {
  double min_eig = std::numeric_limits<double>::infinity();
  bool psd = true;

  TrackerParams params;
  Tracker linear(params);
  std::set<int> ids;
  double err = 0.0;
  bool always_one = true;
  for (int f = 0; f < 30; ++f) {
    const double x = -10.0 + 8.0 * params.dt * f, y = 2.0 + 1.0 * params.dt * f;
    const auto out = linear.Step({CarAt(x, y, std::atan2(1.0, 8.0))});
    psd = Psd(linear, min_eig) && psd;
    always_one = always_one && out.size() == 1;
    for (const auto& o : out) {
      ids.insert(o.id);
      err = (o.box.center - Vec3(x, y, 0.75)).norm();
    }
  }

  Tracker aging(params);
  for (int f = 0; f < 5; ++f) aging.Step({CarAt(0, 0)});
  bool alive_through_max_age = true;
  for (int k = 0; k < params.max_age; ++k) {
    aging.Step({});
    alive_through_max_age = alive_through_max_age && aging.tracks().size() == 1;
  }
  bool dead_after = true;
  for (int k = 0; k < 5; ++k) {
    const auto out = aging.Step({});
    dead_after = dead_after && out.empty() && aging.tracks().empty();
  }

  std::mt19937_64 rng(3003);
  std::normal_distribution<double> n(0.0, 0.3);
  std::bernoulli_distribution drop(0.25);
  Tracker noisy(params);
  for (int f = 0; f < 300; ++f) {
    std::vector<Detection> dets;
    for (int k = 0; k < 5; ++k) {
      if (!drop(rng)) dets.push_back(CarAt(k * 7.0 + 0.4 * f + n(rng), k * 0.5 + n(rng), n(rng)));
    }
    noisy.Step(dets);
    psd = Psd(noisy, min_eig) && psd;
  }

  const bool pass = ids.size() == 1 && always_one && err < 1e-6 && alive_through_max_age &&
                    dead_after && psd;
  return {pass, fmt::format("ids {}, final position err {:.2e}, death after max_age {}, "
                            "min eigenvalue {:.3e}",
                            ids.size(), err, alive_through_max_age && dead_after ? "ok" : "wrong",
                            min_eig)};
}

// --- scenario runs ------------------------------------------------------------

PipelineResult RunScenario(const std::string& name, PipelineMode mode) {
  const fs::path path = kSource / "scenarios" / name;
  const ScenarioConfig config = LoadScenarioFile(path);
  return RunPipeline(config, LoadPipelineSettings(path, config.frame_dt), {mode, {}, {}});
}

Outcome CooperativeEarliness() {
  const auto r = RunScenario("occluded_intersection.yaml", PipelineMode::kBoth);
  const auto it = r.earliness.find("oncoming");
  if (it == r.earliness.end()) return {false, "target 'oncoming' missing"};
  const auto& e = it->second;
  const auto& v = r.modes.at("vehicle_only").metrics;
  const auto& c = r.modes.at("cooperative").metrics;
  int violations = 0;
  for (std::size_t f = 0; f < v.size(); ++f) {
    if (c[f].Recall() < v[f].Recall()) ++violations;
  }
  const int earliness = e.earliness.value_or(-1);
  return {earliness >= 15 && violations == 0,
          fmt::format("earliness {} frames (vehicle first {}, fused first {}), recall violations {}/{}",
                      earliness, e.vehicle_first.value_or(-1), e.fused_first.value_or(-1),
                      violations, v.size())};
}

Outcome OcclusionReciprocity() {
  const auto r = RunScenario("occlusion_reciprocity.yaml", PipelineMode::kCooperative);
  const std::string target = "parked";
  int frames = 0, fused_kept = 0;
  for (std::size_t f = 0; f < r.truth.size(); ++f) {
    if (!r.roadside_metrics[f].Matched(target) && r.vehicle_metrics[f].Matched(target)) {
      ++frames;
      if (r.modes.at("cooperative").metrics[f].Matched(target)) ++fused_kept;
    }
  }
  return {frames >= 1 && fused_kept == frames,
          fmt::format("{} frames where roadside misses and vehicle detects; fused keeps the "
                      "target in {}",
                      frames, fused_kept)};
}

std::map<std::string, std::string> TreeContents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    if (rel.rfind("timing.", 0) == 0) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[rel] = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  return out;
}

Outcome Determinism() {
  testing::TempDir a("accept_det_a"), b("accept_det_b");
  const fs::path path = kSource / "scenarios" / "occluded_intersection.yaml";
  for (const auto* dir : {&a, &b}) {
    const ScenarioConfig config = LoadScenarioFile(path);
    const auto r = RunPipeline(config, LoadPipelineSettings(path, config.frame_dt),
                               {PipelineMode::kBoth, {}, {}});
    WritePipelineOutputs(r, dir->path);
  }
  const auto ta = TreeContents(a.path), tb = TreeContents(b.path);
  int differing = 0;
  for (const auto& [rel, bytes] : ta) {
    const auto it = tb.find(rel);
    if (it == tb.end() || it->second != bytes) ++differing;
  }
  const bool has_scene = ta.count("scene/manifest.json") && ta.count("metrics.json");
  return {has_scene && differing == 0 && ta.size() == tb.size(),
          fmt::format("{} files compared (timing excluded), {} differ", ta.size(), differing)};
}

Outcome TimingSanity() {
  testing::TempDir dir("accept_timing");
  const ScenarioConfig config =
      LoadScenarioFile(kSource / "scenarios" / "occluded_intersection.yaml");
  int actors = static_cast<int>(config.actors.size());
  bool lidar_ok = true;
  for (const auto& s : config.sensors) {
    lidar_ok = lidar_ok && s.lidar.channels == 32 && std::abs(s.lidar.azimuth_step_deg - 0.4) < 1e-12;
  }
  const auto timing = RunSimulate(config, dir.path);
  double mean = 0.0, max = 0.0;
  for (const auto& s : TimingReport(timing)) {
    if (s.phase == Phase::kSimulate) {
      mean = s.mean;
      max = s.max;
    }
  }
  return {lidar_ok && actors <= 10 && mean <= 0.030,
          fmt::format("mean simulate {:.2f} ms (max {:.2f} ms, limit 30 ms), {} actors, "
                      "{} sensors at 32ch x 0.4 deg",
                      mean * 1e3, max * 1e3, actors, config.sensors.size())};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"kitti-round-trips", 10.0, KittiRoundTrips},
      {"geometry-oracles", 60.0, GeometryOracles},
      {"tracker-properties", 5.0, TrackerProperties},
      {"cooperative-earliness", 120.0, CooperativeEarliness},
      {"occlusion-reciprocity", 0.0, OcclusionReciprocity},
      {"determinism", 0.0, Determinism},
      {"timing-sanity", 0.0, TimingSanity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.time_limit_s <= 0.0 || secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::string limit = c.time_limit_s > 0.0 ? fmt::format(" / limit {:.0f}s", c.time_limit_s) : "";
    std::printf("%s %-22s %s [%.2fs%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(),
                o.detail.c_str(), secs, limit.c_str());
    std::fflush(stdout);
  }
  std::printf("N/A  %-22s no reference detection/tracking scores exist to compare against\n",
              "reference-scores");
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
