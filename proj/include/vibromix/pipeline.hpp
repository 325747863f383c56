// Copyright 2026 The vibromix Authors
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

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vibromix/channel.hpp"
#include "vibromix/control.hpp"
#include "vibromix/session_io.hpp"
#include "vibromix/synth.hpp"

namespace vibromix {

enum class SourceKind { file, synth, network };

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view name);

/// Where a channel's tri-axis input comes from.
///   file     `path` is a session directory (tool `tool`), a WAV whose
///            channels `lanes` hold x, y, z, or an axes CSV.
///   synth    `script` (inline) or `path` (scenario JSON), tool `tool`.
///   network  `address` host:port of a frame server, frames tagged `tool_id`.
struct SourceBinding {
  SourceKind kind = SourceKind::synth;
  std::string path;
  std::string tool;
  std::array<int, 3> lanes{0, 1, 2};
  std::string address;
  int tool_id = 0;
  std::optional<synth::ScenarioScript> script;
};

struct ChannelConfig {
  std::string id;
  SourceBinding source;
  ChannelStrip strip{};
  int sink_lane = 0;
};

struct PipelineConfig {
  double rate = kDefaultRate;
  std::size_t block_size = 64;
  std::vector<ChannelConfig> channels;
  /// Multichannel WAV written at the end of a run; one lane per sink_lane.
  std::optional<std::string> sink_path;
  /// Session directory recorded for the whole of each run.
  std::optional<std::string> record_path;
  /// Drops the one-block output buffer so the sink is sample-aligned with
  /// the post-chain tap. Off models a live device.
  bool align_output = false;
  double meter_window_ms = 100.0;
  std::size_t mailbox_capacity = 256;
};

/// Throws BuildError on an inconsistent configuration.
void validate(const PipelineConfig& config);

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::string& base_dir = {});
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig load_pipeline_config(const std::string& path);

/// Two tools named left and right, both from one synthetic scenario.
PipelineConfig default_pipeline_config(const synth::ScenarioScript& script);

struct LatencyReport {
  double buffering_s = 0.0;     ///< I/O buffering, one block unless aligned
  double group_delay_s = 0.0;   ///< largest filter group delay at band centre
  double total_s() const noexcept { return buffering_s + group_delay_s; }
};

struct LevelFrame {
  std::int64_t sample_index = 0;
  std::map<std::string, ChannelLevels> channels;
};

struct SessionLog {
  double rate = kDefaultRate;
  std::int64_t samples = 0;
  std::uint64_t blocks = 0;
  std::uint64_t deadline_misses = 0;
  std::uint64_t underrun_samples = 0;
  std::uint64_t clamp_count = 0;
  double worst_block_s = 0.0;
  std::vector<io::ParamLogEntry> params;
  std::vector<LevelFrame> levels;
  /// Captured streams (empty unless RunOptions::capture is set).
  std::map<std::string, TriAxisSeries> raw;
  std::map<std::string, std::vector<double>> post;
  std::vector<std::vector<double>> output;
  std::vector<std::string> output_lanes;
};

struct RunOptions {
  bool realtime = false;
  /// Samples to process. Offline runs default to the longest finite source.
  std::optional<std::int64_t> max_samples;
  std::vector<TimedControl> script;
  bool capture = true;
};

struct ChannelTelemetry {
  std::string id;
  ChannelLevels levels;
  CombineMode mode = CombineMode::F3;
  double gain_db = 0.0;
  bool muted = false;
};

struct Telemetry {
  std::int64_t sample_index = 0;
  double timestamp_s = 0.0;  ///< stream time of sample_index
  std::vector<ChannelTelemetry> channels;
};

struct PipelineStatus {
  bool running = false;
  bool realtime = false;
  std::int64_t samples = 0;
  std::uint64_t deadline_misses = 0;
  std::uint64_t underrun_samples = 0;
  std::uint64_t clamp_count = 0;
  bool recording = false;
  std::string recording_path;
  double uptime_s = 0.0;
  LatencyReport latency;
};

nlohmann::json to_json(const Telemetry& t);
nlohmann::json to_json(const PipelineStatus& s);
nlohmann::json to_json(const LatencyReport& l);

/// Source -> per-channel strip -> sink graph. Parameter updates are safe
/// from any thread; they take effect at the next block boundary.
class Pipeline {
 public:
  /// Validates the config, opens sources and designs filters. Throws
  /// BuildError for unusable configurations or unreachable sources.
  static Pipeline build(const PipelineConfig& config);

  Pipeline(Pipeline&&) noexcept;
  Pipeline& operator=(Pipeline&&) noexcept;
  ~Pipeline();

  const PipelineConfig& config() const;
  LatencyReport latency() const;

  /// Blocking run. Offline runs go as fast as possible; real-time runs are
  /// paced to the sample clock.
  SessionLog run(const RunOptions& options = {});

  /// Real-time run on a background thread. `stop` ends it and returns the log.
  void start(RunOptions options = {});
  SessionLog stop();
  bool running() const;

  Ack update_param(const ControlMessage& message);

  Telemetry telemetry() const;
  PipelineStatus status() const;

 private:
  struct Impl;
  explicit Pipeline(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Serialises a run log as a session directory (raw, post, output, params).
io::SessionData to_session(const SessionLog& log);

}  // namespace vibromix
