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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vibromix/session_io.hpp"
#include "vibromix/signal.hpp"

namespace vibromix::trial {

inline constexpr double kAccelThreshold = 0.3;  // m/s^2
inline constexpr double kForceThreshold = 0.2;  // N

/// Noise gate: samples with |v| < threshold become 0, others pass unchanged.
SampleBlock gate(const SampleBlock& block, double threshold);

/// Sign changes per second. Zero-valued samples are skipped, so a run
/// positive -> zeros -> negative counts as one crossing.
double zcr(const SampleBlock& block);

/// sqrt(mean(v^2)) over the whole block; 0 for an empty block.
double rms(const SampleBlock& block);

struct Thresholds {
  double accel = kAccelThreshold;
  double force = kForceThreshold;
};

/// Which acceleration stream is measured: the F3 sum (default) or each axis.
enum class AccelStream { summed, per_axis };

/// How force ZCR is measured. The gated magnitude is non-negative and never
/// crosses zero, so by default ZCR is taken per force axis, with samples
/// zeroed wherever the magnitude is below threshold, and averaged.
enum class ForceZcr { axis_mean, magnitude };

struct TrialOptions {
  Thresholds thresholds{};
  AccelStream accel_stream = AccelStream::summed;
  ForceZcr force_zcr = ForceZcr::axis_mean;
  std::vector<std::string> expected_tools{"left", "right"};
};

struct StreamMetrics {
  double rms = 0.0;
  double zcr = 0.0;
};

struct ToolMetrics {
  StreamMetrics accel;                              ///< summed stream
  std::optional<std::array<StreamMetrics, 3>> per_axis;  ///< per-axis mode only
};

struct TrialMetrics {
  std::map<std::string, ToolMetrics> tools;
  std::optional<StreamMetrics> force;
  double completion_time_s = 0.0;
  Thresholds thresholds{};
  std::vector<std::string> omitted;
};

/// Acceleration metrics of one tool's raw tri-axis stream.
ToolMetrics tool_metrics(const TriAxisSeries& accel, const TrialOptions& options = {});
/// Gated force-magnitude RMS plus ZCR per the chosen mode.
StreamMetrics force_metrics(const TriAxisSeries& force, const TrialOptions& options = {});

TrialMetrics trial_report(const io::SessionData& session, const TrialOptions& options = {});

/// One CSV row per trial; `trial_ids` label the rows.
std::string trials_csv(const std::vector<std::string>& trial_ids,
                       const std::vector<TrialMetrics>& trials,
                       const std::vector<std::string>& tools = {"left", "right"});
nlohmann::json to_json(const TrialMetrics& m);

}  // namespace vibromix::trial
