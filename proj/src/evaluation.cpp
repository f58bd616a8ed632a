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

#include "coopsim/evaluation.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "json.hpp"

namespace coopsim {

double FrameMetrics::Precision() const {
  const int n = true_positives + false_positives;
  return n == 0 ? 1.0 : static_cast<double>(true_positives) / n;
}

double FrameMetrics::Recall() const {
  const int n = true_positives + false_negatives;
  return n == 0 ? 1.0 : static_cast<double>(true_positives) / n;
}

bool FrameMetrics::Matched(std::string_view id) const {
  return std::binary_search(matched_ids.begin(), matched_ids.end(), id);
}

bool FrameMetrics::Present(std::string_view id) const {
  return std::binary_search(truth_ids.begin(), truth_ids.end(), id);
}

namespace {

struct Candidate {
  double iou;
  std::size_t det, truth;
};

// Greedy descending-IoU matching; returns (det index, truth index) pairs.
std::vector<std::pair<std::size_t, std::size_t>> GreedyMatch(
    const std::vector<std::pair<ObjectClass, Box3D>>& dets,
    const std::vector<TruthBox>& truth, double iou_threshold) {
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (dets[i].first != truth[j].cls) continue;
      const double iou = Iou3d(dets[i].second, truth[j].box);
      if (iou > 0.0 && iou >= iou_threshold) cands.push_back({iou, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.det, a.truth) < std::tie(b.det, b.truth);
  });
  std::vector<char> det_used(dets.size(), 0), truth_used(truth.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : cands) {
    if (det_used[c.det] || truth_used[c.truth]) continue;
    det_used[c.det] = truth_used[c.truth] = 1;
    out.emplace_back(c.det, c.truth);
  }
  return out;
}

}  // namespace

FrameMetrics MatchToTruth(const std::vector<Detection>& detections,
                          const std::vector<TruthBox>& truth, int frame,
                          double iou_threshold) {
  std::vector<std::pair<ObjectClass, Box3D>> dets;
  dets.reserve(detections.size());
  for (const auto& d : detections) dets.emplace_back(d.cls, d.box);
  const auto matches = GreedyMatch(dets, truth, iou_threshold);

  FrameMetrics m;
  m.frame = frame;
  m.true_positives = static_cast<int>(matches.size());
  m.false_positives = static_cast<int>(detections.size() - matches.size());
  m.false_negatives = static_cast<int>(truth.size() - matches.size());
  for (const auto& t : truth) m.truth_ids.push_back(t.id);
  for (const auto& [d, t] : matches) m.matched_ids.push_back(truth[t].id);
  std::sort(m.truth_ids.begin(), m.truth_ids.end());
  std::sort(m.matched_ids.begin(), m.matched_ids.end());
  return m;
}

std::optional<int> FirstDetection(const std::vector<FrameMetrics>& metrics,
                                  std::string_view target, int sustain) {
  if (sustain < 1) throw Error("sustain must be >= 1");
  int run = 0;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    run = metrics[i].Matched(target) ? run + 1 : 0;
    if (run >= sustain) return static_cast<int>(i) - sustain + 1;
  }
  return std::nullopt;
}

std::optional<int> Earliness(const std::vector<FrameMetrics>& vehicle_only,
                             const std::vector<FrameMetrics>& fused,
                             std::string_view target, int sustain) {
  auto present = [&](const std::vector<FrameMetrics>& ms) {
    return std::any_of(ms.begin(), ms.end(),
                       [&](const FrameMetrics& m) { return m.Present(target); });
  };
  if (!present(vehicle_only) && !present(fused)) {
    throw Error("unknown target id '" + std::string(target) + "'");
  }
  const auto v = FirstDetection(vehicle_only, target, sustain);
  const auto f = FirstDetection(fused, target, sustain);
  if (!v && !f) return std::nullopt;
  const int v_first = v.value_or(static_cast<int>(vehicle_only.size()));
  const int f_first = f.value_or(static_cast<int>(fused.size()));
  return v_first - f_first;
}

std::string_view ToString(Phase phase) {
  switch (phase) {
    case Phase::kSimulate: return "simulate";
    case Phase::kSaveDisk: return "save_disk";
    case Phase::kPerceive: return "perceive";
    case Phase::kFuse: return "fuse";
    case Phase::kTrack: return "track";
    case Phase::kTotal: return "total";
  }
  return "?";
}

std::vector<PhaseSummary> TimingReport(const std::vector<TimingRecord>& records) {
  std::map<Phase, PhaseSummary> acc;
  for (const auto& r : records) {
    if (!(r.seconds >= 0.0)) throw Error("timing record with negative seconds");
    auto& s = acc[r.phase];
    s.phase = r.phase;
    ++s.count;
    s.mean += r.seconds;
    s.max = std::max(s.max, r.seconds);
  }
  std::vector<PhaseSummary> out;
  for (auto& [phase, s] : acc) {
    s.mean /= s.count;
    out.push_back(s);
  }
  return out;
}

std::string FormatTimingTable(const std::vector<PhaseSummary>& report) {
  std::string out = fmt::format("{:<10} {:>6} {:>12} {:>12}\n", "phase", "frames", "mean_s", "max_s");
  for (const auto& s : report) {
    out += fmt::format("{:<10} {:>6} {:>12.6f} {:>12.6f}\n", ToString(s.phase), s.count, s.mean,
                       s.max);
  }
  return out;
}

std::string TimingReportJson(const std::vector<PhaseSummary>& report) {
  nlohmann::json phases = nlohmann::json::object();
  for (const auto& s : report) {
    phases[std::string(ToString(s.phase))] = {{"frames", s.count}, {"mean_s", s.mean},
                                              {"max_s", s.max}};
  }
  return nlohmann::json{{"phases", phases}}.dump(2) + "\n";
}

double MotMetrics::Mota() const {
  if (ground_truth == 0) return 1.0;
  return 1.0 - static_cast<double>(misses + false_positives + id_switches) / ground_truth;
}

MotMetrics ComputeMot(const std::vector<std::vector<TrackedObject>>& tracks,
                      const std::vector<std::vector<TruthBox>>& truth,
                      double iou_threshold) {
  if (tracks.size() != truth.size()) throw Error("track and truth sequences differ in length");
  MotMetrics m;
  std::map<std::string, int> last_track;
  for (std::size_t f = 0; f < tracks.size(); ++f) {
    std::vector<std::pair<ObjectClass, Box3D>> dets;
    for (const auto& t : tracks[f]) dets.emplace_back(t.cls, t.box);
    const auto matches = GreedyMatch(dets, truth[f], iou_threshold);
    ++m.frames;
    m.ground_truth += static_cast<int>(truth[f].size());
    m.matches += static_cast<int>(matches.size());
    m.false_positives += static_cast<int>(tracks[f].size() - matches.size());
    m.misses += static_cast<int>(truth[f].size() - matches.size());
    for (const auto& [d, t] : matches) {
      const int id = tracks[f][d].id;
      auto [it, inserted] = last_track.try_emplace(truth[f][t].id, id);
      if (!inserted && it->second != id) {
        ++m.id_switches;
        it->second = id;
      }
    }
  }
  return m;
}

}  // namespace coopsim
