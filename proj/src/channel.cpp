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

#include "vibromix/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vibromix/diagnostics.hpp"
#include "vibromix/error.hpp"

namespace vibromix {

std::string_view to_string(CombineMode mode) {
  switch (mode) {
    case CombineMode::F0: return "F0";
    case CombineMode::F1: return "F1";
    case CombineMode::F3: return "F3";
  }
  return "F0";
}

CombineMode combine_mode_from_string(std::string_view name) {
  if (name == "F0" || name == "f0") return CombineMode::F0;
  if (name == "F1" || name == "f1") return CombineMode::F1;
  if (name == "F3" || name == "f3") return CombineMode::F3;
  throw SchemaError("unknown combine mode '" + std::string(name) + "' (expected F0, F1 or F3)");
}

void validate(const ChannelStrip& strip, double rate) {
  validate(strip.filter, rate);
  if (!(strip.gate_threshold >= 0.0)) throw ContractError("gate_threshold must be >= 0");
  if (!(strip.ramp_ms >= 0.0)) throw ContractError("ramp_ms must be >= 0");
  if (!std::isfinite(strip.gain_db)) throw ContractError("gain_db must be finite");
}

void axis_combine(std::span<const double> x, std::span<const double> y,
                  std::span<const double> z, CombineMode mode, std::span<double> out) {
  if (x.size() != out.size() || y.size() != out.size() || z.size() != out.size()) {
    throw ContractError("axis_combine: axis and output lengths differ");
  }
  switch (mode) {
    case CombineMode::F0:
      std::fill(out.begin(), out.end(), 0.0);
      break;
    case CombineMode::F1:
      std::copy(x.begin(), x.end(), out.begin());
      break;
    case CombineMode::F3:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i] + z[i];
      break;
  }
}

SampleBlock axis_combine(const TriAxisSeries& tri, CombineMode mode) {
  SampleBlock out(std::vector<double>(tri.size()), tri.rate());
  axis_combine(tri.x(), tri.y(), tri.z(), mode, out.samples);
  return out;
}

double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
double amplitude_to_db(double amplitude) { return 20.0 * std::log10(amplitude); }

ClampResult clamp_gain_db(double gain_db) {
  if (gain_db > kMaxGainDb) return {kMaxGainDb, true};
  if (gain_db < kMinGainDb) return {kMinGainDb, true};
  return {gain_db, false};
}

GainRamp::GainRamp(double rate, double ramp_ms, double initial_db)
    : ramp_samples_(static_cast<std::size_t>(std::llround(ramp_ms * rate / 1000.0))) {
  const ClampResult c = clamp_gain_db(initial_db);
  target_db_ = c.value;
  current_ = target_ = db_to_amplitude(c.value);
}

ClampResult GainRamp::set_target_db(double gain_db) {
  const ClampResult c = clamp_gain_db(gain_db);
  if (c.clamped) {
    warn("gain " + std::to_string(gain_db) + " dB outside [" + std::to_string(kMinGainDb) +
         ", " + std::to_string(kMaxGainDb) + "] dB, clamped to " + std::to_string(c.value));
  }
  target_db_ = c.value;
  set_target_amplitude(db_to_amplitude(c.value));
  return c;
}

void GainRamp::set_target_amplitude(double amplitude) {
  target_ = amplitude;
  if (current_ == target_) {
    remaining_ = 0;
    return;
  }
  if (ramp_samples_ == 0) {
    current_ = target_;
    remaining_ = 0;
    return;
  }
  remaining_ = ramp_samples_;
  step_ = (target_ - current_) / static_cast<double>(ramp_samples_);
}

void GainRamp::process(std::span<double> data) {
  std::size_t i = 0;
  for (; i < data.size() && remaining_ > 0; ++i) {
    --remaining_;
    current_ = remaining_ == 0 ? target_ : current_ + step_;
    data[i] *= current_;
  }
  if (current_ == 1.0) return;
  for (; i < data.size(); ++i) data[i] *= current_;
}

SampleBlock apply_gain(const SampleBlock& block, double gain_db, GainRamp& ramp) {
  if (gain_db != ramp.target_db()) ramp.set_target_db(gain_db);
  SampleBlock out = block;
  ramp.process(out.samples);
  return out;
}

RmsMeter::RmsMeter(double rate, double window_ms) {
  if (!(window_ms > 0.0)) throw ContractError("meter window must be > 0 ms");
  const auto n = std::max<long long>(1, std::llround(window_ms * rate / 1000.0));
  ring_.assign(static_cast<std::size_t>(n), 0.0);
}

void RmsMeter::reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
  head_ = filled_ = since_refresh_ = 0;
  sum_ = 0.0;
}

void RmsMeter::push(std::span<const double> data) {
  if (ring_.empty()) return;
  for (double v : data) {
    const double sq = v * v;
    sum_ += sq - ring_[head_];
    ring_[head_] = sq;
    head_ = (head_ + 1) % ring_.size();
    filled_ = std::min(filled_ + 1, ring_.size());
    // Periodic exact recomputation keeps the running sum from drifting.
    if (++since_refresh_ >= ring_.size()) {
      sum_ = 0.0;
      for (double s : ring_) sum_ += s;
      since_refresh_ = 0;
    }
  }
}

double RmsMeter::level() const {
  if (filled_ == 0) return 0.0;
  return std::sqrt(std::max(sum_, 0.0) / static_cast<double>(filled_));
}

double meter_rms(const SampleBlock& block, double window_ms) {
  if (!(window_ms > 0.0)) throw ContractError("meter window must be > 0 ms");
  if (block.empty()) return 0.0;
  const auto window = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(window_ms * block.rate / 1000.0)));
  const std::size_t n = std::min(window, block.size());
  double sum = 0.0;
  for (std::size_t i = block.size() - n; i < block.size(); ++i) {
    sum += block.samples[i] * block.samples[i];
  }
  return std::sqrt(sum / static_cast<double>(n));
}

std::vector<double> meter_trace(const SampleBlock& block, double window_ms, double emit_hz) {
  RmsMeter meter(block.rate, window_ms);
  const auto period = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(block.rate / emit_hz)));
  std::vector<double> levels;
  std::span<const double> all(block.samples);
  for (std::size_t pos = 0; pos + period <= all.size(); pos += period) {
    meter.push(all.subspan(pos, period));
    levels.push_back(meter.level());
  }
  return levels;
}

ChannelProcessor::ChannelProcessor(const ChannelStrip& strip, double rate,
                                   double meter_window_ms)
    : strip_(strip),
      rate_(rate),
      cascade_(design_bandpass(strip.filter, rate)),
      gain_(rate, strip.ramp_ms, strip.gain_db),
      pre_meter_(rate, meter_window_ms),
      post_meter_(rate, meter_window_ms) {
  validate(strip, rate);
  strip_.gain_db = gain_.target_db();
}

ClampResult ChannelProcessor::set_gain_db(double gain_db) {
  if (muted_) {
    // Remembered for unmute; the ramp stays at silence.
    const ClampResult c = clamp_gain_db(gain_db);
    if (c.clamped) warn("gain " + std::to_string(gain_db) + " dB clamped to " + std::to_string(c.value));
    strip_.gain_db = c.value;
    return c;
  }
  const ClampResult c = gain_.set_target_db(gain_db);
  strip_.gain_db = c.value;
  return c;
}

void ChannelProcessor::set_muted(bool muted) {
  if (muted == muted_) return;
  muted_ = muted;
  gain_.set_target_amplitude(muted ? 0.0 : db_to_amplitude(strip_.gain_db));
}

void ChannelProcessor::set_filter(const FilterSpec& spec, BiquadCascade cascade) {
  cascade.adopt_state(cascade_);
  cascade_ = std::move(cascade);
  strip_.filter = spec;
}

void ChannelProcessor::process(std::span<const double> x, std::span<const double> y,
                               std::span<const double> z, std::span<double> out) {
  axis_combine(x, y, z, strip_.mode, out);
  cascade_.process_in_place(out);
  pre_meter_.push(out);
  gain_.process(out);
  post_meter_.push(out);
}

}  // namespace vibromix
