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
#include "vibromix/error.hpp"
#include "vibromix/synth.hpp"
#include "vibromix/trial_metrics.hpp"

using namespace vibromix;
using namespace vibromix::trial;

namespace {

// Sign-scan oracle on an already gated waveform, skipping zeros.
std::size_t count_crossings(const std::vector<double>& v) {
  std::size_t n = 0;
  double last = 0.0;
  for (double x : v) {
    if (x == 0.0) continue;
    if (last != 0.0 && (x > 0.0) != (last > 0.0)) ++n;
    last = x;
  }
  return n;
}

synth::ScenarioScript contacts(double amplitude, int n) {
  synth::ScenarioScript s;
  s.duration = 5.0;
  for (int k = 0; k < n; ++k) {
    synth::ScenarioEvent e;
    e.t0 = 0.2 + 0.4 * k;
    e.tool = k % 2 ? "right" : "left";
    e.amplitude = amplitude * (1.0 + 0.25 * (k % 3));
    e.frequency = 200.0 + 50.0 * k;
    e.tau = 0.02;
    s.events.push_back(e);
  }
  return s;
}

io::SessionData session_of(const synth::ScenarioScript& s) {
  io::SessionData d;
  d.raw = synth::render_scenario(s).tools;
  return d;
}

}  // namespace

TEST_SUITE("trial_metrics") {
  TEST_CASE("gate thresholds") {
    const SampleBlock b(testing::gaussian(200, 1), 8000.0);
    CHECK(gate(b, 0.0).samples == b.samples);
    for (double v : gate(SampleBlock(std::vector<double>(50, 0.2), 8000.0), kAccelThreshold).samples) CHECK(v == 0.0);
    const SampleBlock f(std::vector<double>(50, 0.25), 1000.0);
    CHECK(gate(f, kForceThreshold).samples == f.samples);
    CHECK_THROWS_AS(gate(b, -1.0), ContractError);
  }

  TEST_CASE("ZCR of a 100 Hz sine is 200 per second") {
    const SampleBlock s(testing::sine(100.0, 1.0, 8000, 8000.0, 0.1), 8000.0);
    CHECK(std::abs(zcr(s) - 200.0) <= 1.0);
    CHECK(zcr(SampleBlock(std::vector<double>(100, 0.0), 8000.0)) == 0.0);
  }

  TEST_CASE("zero runs do not create crossings") {
    const SampleBlock b({1.0, 0.0, 0.0, -1.0, 0.0, -2.0, 0.0, 3.0}, 8.0);
    CHECK(zcr(b) == doctest::Approx(2.0));
  }

  TEST_CASE("gated burst ZCR matches a sign scan") {
    std::vector<double> v = testing::sine(150.0, 1.0, 8000, 8000.0, 0.2);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= std::exp(-static_cast<double>(k % 2000) / 400.0);
    const SampleBlock g = gate(SampleBlock(v, 8000.0), kAccelThreshold);
    CHECK(zcr(g) == doctest::Approx(static_cast<double>(count_crossings(g.samples))));
  }

  TEST_CASE("silent session gives zeros") {
    io::SessionData d;
    d.raw["left"] = TriAxisSeries::zeros(8000, 8000.0);
    d.raw["right"] = TriAxisSeries::zeros(8000, 8000.0);
    d.force = TriAxisSeries::zeros(1000, 1000.0, SignalKind::force);
    const TrialMetrics m = trial_report(d);
    for (const auto& [id, t] : m.tools) {
      CHECK(t.accel.rms == 0.0);
      CHECK(t.accel.zcr == 0.0);
    }
    CHECK(m.force->rms == 0.0);
    CHECK(m.force->zcr == 0.0);
    CHECK(m.omitted.empty());
    CHECK(m.completion_time_s == doctest::Approx(1.0));
  }

  TEST_CASE("missing streams are listed") {
    io::SessionData d;
    d.raw["left"] = TriAxisSeries::zeros(800, 8000.0);
    const TrialMetrics m = trial_report(d);
    CHECK(m.omitted == std::vector<std::string>{"right acceleration", "force"});
    CHECK(m.tools.contains("left"));
    CHECK_FALSE(m.force);
  }

  TEST_CASE("accel RMS matches the closed-form contact energy") {
    const synth::ScenarioScript s = contacts(20.0, 6);
    const TrialMetrics m = trial_report(session_of(s));
    for (const char* tool : {"left", "right"}) {
      double energy = 0.0;
      for (const auto& e : s.events) {
        if (e.tool == tool) energy += synth::contact_energy_closed_form(e.amplitude, e.frequency, e.tau);
      }
      CAPTURE(tool);
      CHECK(m.tools.at(tool).accel.rms == doctest::Approx(std::sqrt(energy / s.duration)).epsilon(0.02));
    }
  }

  TEST_CASE("doubling contact amplitudes") {
    const TrialMetrics a = trial_report(session_of(contacts(1.0, 6)));
    const TrialMetrics b = trial_report(session_of(contacts(2.0, 6)));
    for (const char* tool : {"left", "right"}) {
      CHECK(b.tools.at(tool).accel.rms > a.tools.at(tool).accel.rms);
      CHECK(b.tools.at(tool).accel.zcr >= a.tools.at(tool).accel.zcr);
    }
  }

  TEST_CASE("force metrics") {
    std::vector<double> fx(1000), fy(1000, 0.0), fz(1000, 0.0);
    for (std::size_t k = 0; k < fx.size(); ++k) fx[k] = 0.5 * std::sin(2.0 * std::numbers::pi * 5.0 * static_cast<double>(k) / 1000.0 + 0.1);
    const TriAxisSeries f(fx, fy, fz, 1000.0, SignalKind::force);
    const StreamMetrics axis_mean = force_metrics(f);
    // Only fx crosses; y and z stay at zero. The oracle gates fx on the magnitude.
    std::vector<double> gated = fx;
    for (double& v : gated) {
      if (std::abs(v) < kForceThreshold) v = 0.0;
    }
    CHECK(axis_mean.zcr == doctest::Approx(static_cast<double>(count_crossings(gated)) / 3.0));
    TrialOptions opts;
    opts.force_zcr = ForceZcr::magnitude;
    CHECK(force_metrics(f, opts).zcr == 0.0);
    CHECK(axis_mean.rms > 0.0);
  }

  TEST_CASE("per-axis mode and reporting") {
    TrialOptions opts;
    opts.accel_stream = AccelStream::per_axis;
    io::SessionData d = session_of(contacts(5.0, 4));
    d.start_s = 1.0;
    d.end_s = 4.0;
    const TrialMetrics m = trial_report(d, opts);
    CHECK(m.tools.at("left").per_axis);
    CHECK(m.completion_time_s == doctest::Approx(3.0));
    const std::string csv = trials_csv({"t1"}, {m});
    CHECK(csv.rfind("trial,left_accel_rms,left_accel_zcr,right_accel_rms,right_accel_zcr,", 0) == 0);
    CHECK(to_json(m)["force"].is_null());
    CHECK(to_json(m)["thresholds"]["accel_m_s2"] == 0.3);
  }
}
