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
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vibromix/signal.hpp"

namespace vibromix::synth {

using Direction = std::array<double, 3>;
/// Row-major 3x3 matrix applied to every sample: out = M * in.
using MixingMatrix = std::array<std::array<double, 3>, 3>;

inline constexpr double kDefaultContactHz = 250.0;
inline constexpr double kDefaultContactTau = 0.020;

/// Exponentially decaying sinusoid projected onto `direction`:
///   axis_i[k] = dir_i * A * exp(-t/tau) * sin(2 pi f t),  t = (k + 1/2) / rate
/// over round(5 tau * rate) samples. Midpoint sampling makes the first
/// sample nonzero so onsets land exactly on the scheduled index.
/// Frequencies outside 80..1000 Hz produce a warning, not an error.
TriAxisSeries contact_transient(double amplitude, double frequency_hz, double tau_s,
                                const Direction& direction, double rate);

/// Exact integral of A^2 exp(-2t/tau) sin^2(2 pi f t) over [0, 5 tau].
double contact_energy_closed_form(double amplitude, double frequency_hz, double tau_s);

/// Band-limited Gaussian noise on all three axes with equal per-axis power.
/// The result is scaled so that sqrt(mean(x^2 + y^2 + z^2)) == level.
TriAxisSeries motion_noise(double level, double band_low_hz, double band_high_hz,
                           double duration_s, double rate, std::uint64_t seed);

/// Tone at `rotation_hz` plus 2nd and 3rd harmonics, concentrated on the x
/// axis (the tool's rotation axis) with small y/z leakage. Scaled like
/// motion_noise so the tri-axis RMS equals `level`.
TriAxisSeries rotation_tone(double level, double rotation_hz, double duration_s, double rate);

/// Applies a linear sensor-location model (attenuation plus crosstalk).
TriAxisSeries apply_mixing(const TriAxisSeries& series, const MixingMatrix& m);

MixingMatrix identity_mixing();
MixingMatrix attenuation(double gain);

enum class EventKind { contact, motion, rotation };

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& name);

struct ScenarioEvent {
  double t0 = 0.0;
  EventKind kind = EventKind::contact;
  std::string tool = "left";
  // contact
  double amplitude = 1.0;
  double frequency = kDefaultContactHz;
  double tau = kDefaultContactTau;
  Direction direction{1.0, 0.0, 0.0};
  // motion / rotation
  double duration = 1.0;
  double level = 0.0;
  double band_low = 80.0;
  double band_high = 1000.0;
  double rotation_hz = 120.0;
};

struct NoiseFloor {
  double level = 0.0;  ///< tri-axis RMS of white Gaussian noise
};

struct ScenarioScript {
  double rate = kDefaultRate;
  double duration = 10.0;
  std::uint64_t seed = 1;
  std::vector<std::string> tools{"left", "right"};
  std::vector<ScenarioEvent> events;
  std::optional<NoiseFloor> noise_floor;
  /// Optional per-tool sensor-location model applied after superposition.
  std::map<std::string, MixingMatrix> mixing;
};

/// Throws SchemaError when events are unsorted, a direction is not unit
/// length, a contact runs past the end, or an event names an unknown tool.
void validate(const ScenarioScript& script);

ScenarioScript script_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioScript& script);
ScenarioScript load_script(const std::string& path);

struct GroundTruthEvent {
  std::size_t index = 0;  ///< position in the script
  std::string tool;
  EventKind kind = EventKind::contact;
  double t0 = 0.0;
  std::int64_t onset_sample = 0;
  std::int64_t end_sample = 0;  ///< exclusive
  double energy = 0.0;          ///< sum of per-axis ASE of the rendered event
};

struct RenderedScenario {
  std::map<std::string, TriAxisSeries> tools;
  std::vector<GroundTruthEvent> events;
};

/// Superposition of all events plus the optional noise floor. Deterministic
/// given the script (noise is seeded from script.seed and the event index).
RenderedScenario render_scenario(const ScenarioScript& script);

/// Ten-second two-tool scenario: 25 ms contacts at 300, 400 and 500 Hz on
/// both tools over in-band hand motion and a light noise floor.
ScenarioScript demo_script(std::uint64_t seed = 1, double rate = kDefaultRate);

/// Ground-truth table as CSV text.
std::string ground_truth_csv(const std::vector<GroundTruthEvent>& events);

}  // namespace vibromix::synth
