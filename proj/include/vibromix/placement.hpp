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
#include <optional>
#include <string>
#include <vector>

#include "vibromix/signal.hpp"

namespace vibromix::placement {

enum class Action { rotation, motion, contact, idle };

std::string to_string(Action action);
Action action_from_string(const std::string& name);

struct LabeledRecording {
  TriAxisSeries series;
  std::string location;
  Action action = Action::idle;
  int trial = 0;
};

/// sqrt(mean(x^2 + y^2 + z^2)). Throws AnalysisError on an empty series.
double rms3(const TriAxisSeries& series);

/// RMS of a single axis.
double axis_rms(const TriAxisSeries& series, std::size_t axis);

/// Power ratio in dB: 10*log10(rms3(signal)^2 / rms3(noise)^2).
/// Throws AnalysisError when the noise power is zero.
double snr_db(const TriAxisSeries& signal, const TriAxisSeries& noise);

/// Per-axis SNR in dB, each from single-axis RMS values.
std::array<double, 3> snr_db_per_axis(const TriAxisSeries& signal, const TriAxisSeries& noise);

/// Checked variant on labeled recordings: same location, noise is idle.
double snr_db(const LabeledRecording& signal, const LabeledRecording& noise);
std::array<double, 3> snr_db_per_axis(const LabeledRecording& signal,
                                      const LabeledRecording& noise);

/// Acceleration signal energy per axis: sum of a[n]^2 / rate.
std::array<double, 3> ase(const TriAxisSeries& series);
double ase(const SampleBlock& block);

/// Handle-side total energy over source-side total energy.
/// Throws ContractError on a rate or length mismatch, AnalysisError on zero
/// source energy.
double e_ratio(const TriAxisSeries& handle, const TriAxisSeries& source);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation (n - 1); 0 for n == 1
  std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& values);

struct SnrCell {
  std::string location;
  Action action = Action::contact;
  MeanStd snr_db;
  std::optional<std::array<MeanStd, 3>> per_axis;  ///< contact only
};

struct OmittedCell {
  std::string location;
  std::string reason;
};

struct SelectionRule {
  /// A location is eligible while rotation SNR <= contact SNR + margin.
  double rotation_margin_db = 0.0;
  /// Optional absolute ceiling on rotation SNR.
  std::optional<double> rotation_ceiling_db;
  /// Contact SNRs closer than this are treated as tied.
  double tie_tolerance_db = 1e-6;
};

struct SnrReport {
  std::vector<SnrCell> cells;
  std::vector<OmittedCell> omitted;
  std::vector<std::string> locations;  ///< in first-seen order
  std::optional<std::string> best;     ///< set only when a unique winner exists
  std::vector<std::string> tied;       ///< filled when the winner is ambiguous
  std::vector<std::string> excluded;   ///< failed the rotation rule
  std::string selection_note;

  const SnrCell* find(const std::string& location, Action action) const;
};

SnrReport placement_report(const std::vector<LabeledRecording>& dataset,
                           const SelectionRule& rule = {});

struct ActuatorPair {
  std::string location;
  int trial = 0;
  TriAxisSeries handle;
  TriAxisSeries source;
};

struct EnergyRatioRow {
  std::string location;
  MeanStd e_ratio;
};

struct EnergyRatioReport {
  std::vector<EnergyRatioRow> rows;
  std::optional<std::string> best;  ///< highest mean E_ratio, unique
  std::vector<std::string> tied;
};

EnergyRatioReport actuator_report(const std::vector<ActuatorPair>& pairs);

std::string snr_report_csv(const SnrReport& report);
std::string energy_ratio_report_csv(const EnergyRatioReport& report);
std::string report_text(const SnrReport& snr, const EnergyRatioReport* energy);

/// Dataset manifest: CSV with header `path,location,action,trial[,role]`.
/// role is `sensor` (default), `handle` or `source`; handle/source rows are
/// paired by (location, trial) for the actuator report. Paths are relative
/// to the manifest's directory; .wav and .csv recordings are accepted.
struct Dataset {
  std::vector<LabeledRecording> recordings;
  std::vector<ActuatorPair> actuator_pairs;
};

Dataset load_dataset(const std::string& manifest_path);

}  // namespace vibromix::placement
