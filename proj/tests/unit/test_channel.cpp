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

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vibromix/channel.hpp"
#include "vibromix/error.hpp"

using namespace vibromix;

TEST_SUITE("channel") {
  TEST_CASE("F3 sums the axes") {
    const TriAxisSeries s(std::vector<double>(32, 1.0), std::vector<double>(32, 2.0),
                          std::vector<double>(32, 3.0), 8000.0);
    for (double v : axis_combine(s, CombineMode::F3).samples) CHECK(v == 6.0);
  }

  TEST_CASE("F1 is exactly the x axis and F0 is silence") {
    const TriAxisSeries s = testing::random_series(1000, 21);
    CHECK(axis_combine(s, CombineMode::F1).samples == s.x());
    for (double v : axis_combine(s, CombineMode::F0).samples) CHECK(v == 0.0);
  }

  TEST_CASE("mode names") {
    CHECK(combine_mode_from_string("F1") == CombineMode::F1);
    CHECK(combine_mode_from_string("f3") == CombineMode::F3);
    CHECK(to_string(CombineMode::F0) == "F0");
    CHECK_THROWS_AS(combine_mode_from_string("F2"), SchemaError);
  }

  TEST_CASE("dB conversions use the amplitude convention") {
    CHECK(db_to_amplitude(0.0) == 1.0);
    CHECK(db_to_amplitude(20.0 * std::log10(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(amplitude_to_db(10.0) == doctest::Approx(20.0));
  }

  TEST_CASE("gain clamps to the tuning range") {
    CHECK(clamp_gain_db(4.0).value == 4.0);
    CHECK_FALSE(clamp_gain_db(4.0).clamped);
    CHECK(clamp_gain_db(15.0).value == 10.0);
    CHECK(clamp_gain_db(15.0).clamped);
    CHECK(clamp_gain_db(-80.0).value == -40.0);
  }

  TEST_CASE("0 dB leaves a block untouched") {
    GainRamp ramp(8000.0, 10.0);
    const SampleBlock b(testing::gaussian(500, 4), 8000.0);
    CHECK(apply_gain(b, 0.0, ramp).samples == b.samples);
  }

  TEST_CASE("+6.0206 dB doubles a unit sine in steady state") {
    GainRamp ramp(8000.0, 10.0);
    const SampleBlock b(testing::sine(250.0, 1.0, 8000, 8000.0, 0.3), 8000.0);
    const SampleBlock out = apply_gain(b, 6.0206, ramp);
    double peak = 0.0, in_peak = 0.0;
    for (std::size_t k = 4000; k < out.size(); ++k) {
      peak = std::max(peak, std::abs(out.samples[k]));
      in_peak = std::max(in_peak, std::abs(b.samples[k]));
    }
    CHECK(peak / in_peak == doctest::Approx(2.0).epsilon(1e-5));
    for (std::size_t k = 100; k < out.size(); ++k) {
      CHECK(out.samples[k] == doctest::Approx(b.samples[k] * db_to_amplitude(6.0206)).epsilon(1e-12));
    }
  }

  TEST_CASE("a 10 ms ramp at 8 kHz spans 80 monotone samples") {
    GainRamp ramp(8000.0, 10.0);
    CHECK(ramp.ramp_samples() == 80);
    ramp.set_target_db(10.0);
    std::vector<double> ones(200, 1.0);
    ramp.process(ones);
    const double target = db_to_amplitude(10.0);
    std::size_t transition = 0;
    for (std::size_t k = 0; k < ones.size(); ++k) {
      if (k > 0) CHECK(ones[k] >= ones[k - 1]);
      if (std::abs(ones[k] - target) > 1e-12) ++transition;
    }
    CHECK(transition == 79);  // the 80th sample lands on the target
    CHECK(ones[79] == doctest::Approx(target).epsilon(1e-12));
    CHECK(ones[0] > 1.0);
  }

  TEST_CASE("out-of-range targets warn and clamp") {
    testing::WarningLog log;
    GainRamp ramp(8000.0, 10.0);
    const ClampResult r = ramp.set_target_db(15.0);
    CHECK(r.clamped);
    CHECK(r.value == 10.0);
    CHECK(ramp.target_db() == 10.0);
    CHECK(log.messages.size() == 1);
  }

  TEST_CASE("RMS meter basics") {
    CHECK(meter_rms(SampleBlock(std::vector<double>(4000, -0.5), 8000.0), 100.0) == doctest::Approx(0.5));
    CHECK(meter_rms(SampleBlock(std::vector<double>(4000, 0.0), 8000.0), 100.0) == 0.0);
    const SampleBlock s(testing::sine(250.0, 1.0, 16000, 8000.0), 8000.0);
    CHECK(std::abs(meter_rms(s, 500.0) - std::sqrt(0.5)) <= 0.01);
  }

  TEST_CASE("RMS meter tracks a sliding window") {
    RmsMeter m(8000.0, 100.0);
    std::vector<double> loud(800, 2.0), quiet(400, 0.0);
    m.push(loud);
    CHECK(m.level() == doctest::Approx(2.0));
    m.push(quiet);
    CHECK(m.level() == doctest::Approx(std::sqrt(4.0 * 400.0 / 800.0)));
  }

  TEST_CASE("meter trace is emitted at 10 Hz") {
    const SampleBlock s(std::vector<double>(8000, 1.0), 8000.0);
    const auto trace = meter_trace(s, 100.0);
    CHECK(trace.size() == 10);
    for (double v : trace) CHECK(v == doctest::Approx(1.0));
  }

  TEST_CASE("identity strip passes x through exactly") {
    ChannelStrip strip;
    strip.mode = CombineMode::F1;
    strip.filter.bypass = true;
    ChannelProcessor p(strip, 8000.0);
    const TriAxisSeries s = testing::random_series(640, 7);
    std::vector<double> out(640);
    p.process(s.x(), s.y(), s.z(), out);
    CHECK(out == s.x());
  }

  TEST_CASE("processor reports pre and post gain levels") {
    ChannelStrip strip;
    strip.filter.bypass = true;
    strip.gain_db = 20.0 * std::log10(0.5);
    ChannelProcessor p(strip, 8000.0);
    const std::vector<double> ones(1600, 1.0), zeros(1600, 0.0);
    std::vector<double> out(1600);
    p.process(ones, zeros, zeros, out);
    CHECK(p.levels().pre_gain_rms == doctest::Approx(1.0));
    CHECK(p.levels().post_gain_rms == doctest::Approx(0.5));
  }

  TEST_CASE("mute ramps to silence and restores the stored gain") {
    ChannelStrip strip;
    strip.filter.bypass = true;
    ChannelProcessor p(strip, 8000.0);
    const std::vector<double> ones(400, 1.0), zeros(400, 0.0);
    std::vector<double> out(400);
    p.set_muted(true);
    p.process(ones, zeros, zeros, out);
    CHECK(out.back() == 0.0);
    p.set_gain_db(6.0);
    p.process(ones, zeros, zeros, out);
    CHECK(out.back() == 0.0);
    p.set_muted(false);
    p.process(ones, zeros, zeros, out);
    CHECK(out.back() == doctest::Approx(db_to_amplitude(6.0)));
  }

  TEST_CASE("strip validation") {
    ChannelStrip s;
    s.ramp_ms = -1.0;
    CHECK_THROWS(validate(s, 8000.0));
    ChannelStrip f;
    f.filter.high_cut = 5000.0;
    CHECK_THROWS_AS(validate(f, 8000.0), DesignError);
  }
}
