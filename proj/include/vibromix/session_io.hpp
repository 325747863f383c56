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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vibromix/signal.hpp"

namespace vibromix::io {

// ---------------------------------------------------------------------------
// WAV (RIFF/WAVE). Writers always emit 32-bit IEEE float, interleaved.
// Readers also accept 16/24/32-bit integer PCM, 64-bit float and
// WAVE_FORMAT_EXTENSIBLE wrappers of those.

struct WavData {
  double rate = 0.0;
  std::vector<std::vector<double>> channels;

  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

void write_wav(const std::string& path, const std::vector<std::vector<double>>& channels,
               double rate);
void write_wav(const std::string& path, const TriAxisSeries& series);
void write_wav(const std::string& path, const SampleBlock& block);

/// Throws ParseError (with byte offset) on malformed or truncated files.
WavData read_wav(const std::string& path);
/// Same parser over an in-memory image; `origin` names it in messages.
WavData parse_wav(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");
std::vector<std::uint8_t> encode_wav(const std::vector<std::vector<double>>& channels, double rate);

/// Reads a 3-channel WAV; channels map to x, y, z in order.
TriAxisSeries read_wav_tri(const std::string& path, SignalKind kind = SignalKind::acceleration);
SampleBlock read_wav_mono(const std::string& path);

// ---------------------------------------------------------------------------
// CSV

class CsvTable {
 public:
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool has_column(const std::string& name) const;
  std::size_t column(const std::string& name) const;  ///< throws SchemaError
  const std::string& at(std::size_t row, const std::string& name) const;
  std::size_t size() const { return rows.size(); }
};

CsvTable read_csv_table(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<memory>");

struct AxesCsv {
  TriAxisSeries series;
  bool resampled = false;  ///< timestamps were not uniform
};

/// Tri-axis CSV with a timestamp column (`timestamp`, `time`, `t` or
/// `time_s`, seconds) and axis columns (`fx,fy,fz` for force, `x,y,z`
/// otherwise). Non-uniform timestamps are resampled onto a uniform grid by
/// linear interpolation at rate round(1 / median step).
AxesCsv read_axes_csv(const std::string& path, SignalKind kind);
AxesCsv parse_axes_csv(const CsvTable& table, SignalKind kind, const std::string& origin);

/// Force stream (kind=force); torque columns are ignored. Missing fx/fy/fz or
/// timestamp is a SchemaError. A warning is emitted when resampling occurred.
TriAxisSeries read_force_csv(const std::string& path);
void write_force_csv(const std::string& path, const TriAxisSeries& force);

/// .wav or .csv recording as a tri-axis acceleration series.
TriAxisSeries read_recording(const std::string& path);

// ---------------------------------------------------------------------------
// Parameter log

struct ParamLogEntry {
  std::int64_t sample_index = 0;
  double time_s = 0.0;
  std::string client;
  std::string op;
  std::string channel;
  std::string requested;
  std::string applied;
  bool clamped = false;

  friend bool operator==(const ParamLogEntry&, const ParamLogEntry&) = default;
};

std::string param_log_csv(const std::vector<ParamLogEntry>& entries);
void write_param_log(const std::string& path, const std::vector<ParamLogEntry>& entries);
std::vector<ParamLogEntry> read_param_log(const std::string& path);

// ---------------------------------------------------------------------------
// Session directories

inline constexpr int kManifestVersion = 1;

struct ToolFiles {
  std::string id;
  std::string raw;   ///< 3-channel pre-filter acceleration
  std::string post;  ///< mono post-chain drive signal (may be empty)
};

struct SessionManifest {
  int version = kManifestVersion;
  double rate = kDefaultRate;
  std::vector<ToolFiles> tools;
  std::string output;                 ///< multichannel sink WAV, optional
  std::vector<std::string> output_lanes;  ///< tool id per output channel
  std::string force;                  ///< force CSV, optional
  double force_rate = 0.0;            ///< rate of the force CSV
  std::string param_log;              ///< parameter log CSV, optional
  double start_s = 0.0;               ///< trial start marker
  std::optional<double> end_s;        ///< trial end marker
  std::int64_t samples = 0;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const SessionManifest& m);
SessionManifest manifest_from_json(const nlohmann::json& j);
/// JSON Schema document describing manifest.json.
nlohmann::json manifest_schema();

/// In-memory view of a recorded session.
struct SessionData {
  double rate = kDefaultRate;
  std::map<std::string, TriAxisSeries> raw;
  std::map<std::string, std::vector<double>> post;
  std::vector<std::string> output_lanes;
  std::vector<std::vector<double>> output;
  std::optional<TriAxisSeries> force;
  std::vector<ParamLogEntry> param_log;
  double start_s = 0.0;
  std::optional<double> end_s;
};

/// Writes WAV/CSV files plus manifest.json into `dir` (created if needed).
SessionManifest write_session(const std::string& dir, const SessionData& session);

/// Loads and validates a session directory.
SessionData load_session(const std::string& dir);

/// Checks that every referenced file exists and that rates agree with the
/// manifest. Returns a list of problems (empty when valid).
std::vector<std::string> validate_session(const std::string& dir);

}  // namespace vibromix::io
