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

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vibromix/filter.hpp"
#include "vibromix/signal.hpp"

namespace vibromix {

/// Feedback modes: F0 mutes, F1 forwards the x axis, F3 sums x + y + z.
enum class CombineMode { F0, F1, F3 };

std::string_view to_string(CombineMode mode);
CombineMode combine_mode_from_string(std::string_view name);

inline constexpr double kMaxGainDb = 10.0;
inline constexpr double kMinGainDb = -40.0;

struct ChannelStrip {
  CombineMode mode = CombineMode::F3;
  FilterSpec filter{};
  double gain_db = 0.0;
  double gate_threshold = 0.0;
  double ramp_ms = 10.0;

  friend bool operator==(const ChannelStrip&, const ChannelStrip&) = default;
};

/// Throws ContractError / DesignError for an unusable strip.
void validate(const ChannelStrip& strip, double rate);

SampleBlock axis_combine(const TriAxisSeries& tri, CombineMode mode);
/// Span form used by the streaming engine; `out` must match the axis length.
void axis_combine(std::span<const double> x, std::span<const double> y,
                  std::span<const double> z, CombineMode mode, std::span<double> out);

double db_to_amplitude(double db);
double amplitude_to_db(double amplitude);

struct ClampResult {
  double value;
  bool clamped;
};

/// Limits a gain to [kMinGainDb, kMaxGainDb].
ClampResult clamp_gain_db(double gain_db);

/// Gain stage with linear-in-amplitude ramps. A target change reaches its
/// value after round(ramp_ms * rate / 1000) samples.
class GainRamp {
 public:
  GainRamp() = default;
  GainRamp(double rate, double ramp_ms, double initial_db = 0.0);

  /// Schedules a new target. Out-of-range values are clamped with a warning;
  /// the applied value is returned.
  ClampResult set_target_db(double gain_db);
  /// Schedules a target amplitude directly (used by mute).
  void set_target_amplitude(double amplitude);

  double target_db() const noexcept { return target_db_; }
  double current_amplitude() const noexcept { return current_; }
  bool ramping() const noexcept { return remaining_ > 0; }
  std::size_t ramp_samples() const noexcept { return ramp_samples_; }

  void process(std::span<double> data);

 private:
  double target_db_ = 0.0;
  double current_ = 1.0;
  double target_ = 1.0;
  double step_ = 0.0;
  std::size_t remaining_ = 0;
  std::size_t ramp_samples_ = 80;
};

/// Scales `block` through `ramp` after setting its target to `gain_db`.
SampleBlock apply_gain(const SampleBlock& block, double gain_db, GainRamp& ramp);

/// Sliding-window RMS meter. The window is a ring of squared samples.
class RmsMeter {
 public:
  RmsMeter() = default;
  RmsMeter(double rate, double window_ms);

  void push(std::span<const double> data);
  double level() const;
  void reset();

 private:
  std::vector<double> ring_;
  std::size_t head_ = 0;
  std::size_t filled_ = 0;
  double sum_ = 0.0;
  std::size_t since_refresh_ = 0;
};

/// RMS over the trailing `window_ms` of the block (whole block when shorter).
double meter_rms(const SampleBlock& block, double window_ms);

/// Meter levels sampled every 1/10 s across the block.
std::vector<double> meter_trace(const SampleBlock& block, double window_ms,
                                double emit_hz = 10.0);

/// Levels published by a channel for telemetry.
struct ChannelLevels {
  double pre_gain_rms = 0.0;
  double post_gain_rms = 0.0;
};

/// Streaming realization of one channel strip: combine, band-pass, gain,
/// meters. Owned and driven by a single processing thread.
class ChannelProcessor {
 public:
  ChannelProcessor() = default;
  ChannelProcessor(const ChannelStrip& strip, double rate, double meter_window_ms = 100.0);

  const ChannelStrip& strip() const noexcept { return strip_; }

  void set_mode(CombineMode mode) { strip_.mode = mode; }
  ClampResult set_gain_db(double gain_db);
  void set_muted(bool muted);
  bool muted() const noexcept { return muted_; }
  /// Swaps in a cascade designed elsewhere; keeps filter state if compatible.
  void set_filter(const FilterSpec& spec, BiquadCascade cascade);

  /// Processes one block into `out` (post-chain signal). All spans have the
  /// same length.
  void process(std::span<const double> x, std::span<const double> y, std::span<const double> z,
               std::span<double> out);

  ChannelLevels levels() const { return {pre_meter_.level(), post_meter_.level()}; }
  const BiquadCascade& cascade() const noexcept { return cascade_; }

 private:
  ChannelStrip strip_{};
  double rate_ = kDefaultRate;
  bool muted_ = false;
  BiquadCascade cascade_;
  GainRamp gain_;
  RmsMeter pre_meter_;
  RmsMeter post_meter_;
};

}  // namespace vibromix
