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

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "coopsim/pipeline.hpp"
#include "coopsim/scenario.hpp"
#include "coopsim/stream_export.hpp"

namespace {

namespace fs = std::filesystem;
using namespace coopsim;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitIo = 3;

volatile std::sig_atomic_t g_stop = 0;

void OnSignal(int) { g_stop = 1; }

ScenarioConfig Load(const std::string& path, const std::optional<std::uint64_t>& seed) {
  if (!fs::is_regular_file(path)) throw InputError("scenario file not found: " + path);
  ScenarioConfig config = LoadScenarioFile(path);
  if (seed) config.seed = *seed;
  return config;
}

int CmdValidate(const std::string& scenario) {
  const ScenarioConfig config = Load(scenario, std::nullopt);
  LoadPipelineSettings(scenario, config.frame_dt);
  std::cerr << "ok: " << config.name << " (" << config.actors.size() << " actors, "
            << config.sensors.size() << " sensors, " << config.frame_count << " frames)\n";
  return kExitOk;
}

int CmdSimulate(const std::string& scenario, const std::string& out,
                const std::optional<std::uint64_t>& seed) {
  const ScenarioConfig config = Load(scenario, seed);
  const auto timing = RunSimulate(config, out);
  std::cerr << FormatTimingTable(TimingReport(timing));
  return kExitOk;
}

int CmdPipeline(const std::string& scenario, const std::string& out,
                const std::optional<std::uint64_t>& seed, const std::string& mode_name,
                const std::string& labels_dir, const std::string& input_dir) {
  const ScenarioConfig config = Load(scenario, seed);
  const PipelineSettings settings = LoadPipelineSettings(scenario, config.frame_dt);
  PipelineOptions options;
  options.mode = *ParsePipelineMode(mode_name);
  if (!labels_dir.empty()) {
    if (!fs::is_directory(labels_dir)) throw InputError("labels dir not found: " + labels_dir);
    options.labels_dir = labels_dir;
  }
  if (!input_dir.empty()) {
    if (!fs::is_directory(input_dir)) throw InputError("input dir not found: " + input_dir);
    options.input_dir = input_dir;
  }
  const PipelineResult result = RunPipeline(config, settings, options);
  WritePipelineOutputs(result, out);
  for (const auto& [id, e] : result.earliness) {
    std::cerr << "earliness " << id << ": "
              << (e.earliness ? std::to_string(*e.earliness) : std::string("n/a")) << "\n";
  }
  std::cerr << FormatTimingTable(TimingReport(result.timing));
  return kExitOk;
}

int CmdServe(const std::string& dir, const std::string& host, int port) {
  std::unique_ptr<stream::SceneServer> server;
  try {
    server = std::make_unique<stream::SceneServer>(dir);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  try {
    server->Start(host, port);
  } catch (const Error& e) {
    throw IoError(e.what());
  }
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  std::cerr << "serving " << dir << " on http://" << host << ":" << server->port() << "\n";
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server->Stop();
  std::cerr << "stopped\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative vehicle-road perception simulator"};
  app.require_subcommand(1);

  std::string scenario, out, labels_dir, input_dir, dir, host = "127.0.0.1";
  std::string mode = "both";
  std::optional<std::uint64_t> seed;
  int port = 8030;

  auto* simulate = app.add_subcommand("simulate", "Write KITTI-style sensor data for a scenario");
  simulate->add_option("--scenario", scenario, "Scenario YAML")->required();
  simulate->add_option("--out", out, "Output directory")->required();
  simulate->add_option("--seed", seed, "Override the scenario seed");

  auto* pipeline = app.add_subcommand("pipeline", "Detect, fuse, track, evaluate and export");
  pipeline->add_option("--scenario", scenario, "Scenario YAML")->required();
  pipeline->add_option("--out", out, "Output directory")->required();
  pipeline->add_option("--seed", seed, "Override the scenario seed");
  pipeline->add_option("--pipeline", mode, "vehicle_only, cooperative or both")
      ->check(CLI::IsMember({"vehicle_only", "cooperative", "both"}));
  pipeline->add_option("--labels-dir", labels_dir,
                       "External detections: <dir>/<sensor_id>/label/0000.txt");
  pipeline->add_option("--input", input_dir, "Read clouds and oxts from a simulate output");

  auto* serve = app.add_subcommand("serve", "Serve an exported scene over HTTP");
  serve->add_option("--dir", dir, "Scene directory (contains manifest.json)")->required();
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", scenario, "Scenario YAML")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  try {
    if (*validate) return CmdValidate(scenario);
    if (*simulate) return CmdSimulate(scenario, out, seed);
    if (*pipeline) return CmdPipeline(scenario, out, seed, mode, labels_dir, input_dir);
    if (*serve) return CmdServe(dir, host, port);
  } catch (const ConfigError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const InputError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
