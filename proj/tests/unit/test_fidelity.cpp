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
#include "vibromix/fidelity.hpp"
#include "vibromix/filter.hpp"
#include "vibromix/synth.hpp"

using namespace vibromix;
using namespace vibromix::fidelity;

namespace {

std::vector<double> delayed(const std::vector<double>& v, std::size_t d, double scale = 1.0) {
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t k = d; k < v.size(); ++k) out[k] = scale * v[k - d];
  return out;
}

double variance(const std::vector<double>& v) {
  double m = 0.0, acc = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size());
}

// Brute-force normalised cross-correlation at one lag.
double oracle_xcorr(const std::vector<double>& a, const std::vector<double>& b, std::int64_t lag) {
  double ma = 0.0, mb = 0.0;
  for (double x : a) ma += x;
  for (double x : b) mb += x;
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double ea = 0.0, eb = 0.0, acc = 0.0;
  for (double x : a) ea += (x - ma) * (x - ma);
  for (double x : b) eb += (x - mb) * (x - mb);
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.size()); ++i) {
    const std::int64_t j = i + lag;
    if (j < 0 || j >= static_cast<std::int64_t>(b.size())) continue;
    acc += (a[static_cast<std::size_t>(i)] - ma) * (b[static_cast<std::size_t>(j)] - mb);
  }
  return acc / std::sqrt(ea * eb);
}

SampleBlock demo_tool() {
  const auto r = synth::render_scenario(synth::demo_script(1));
  return axis_combine(r.tools.at("left"), CombineMode::F3);
}

}  // namespace

TEST_SUITE("fidelity") {
  TEST_CASE("autocorrelation peaks at lag 0") {
    const SampleBlock a(testing::gaussian(8000, 1), 8000.0);
    CHECK(xcorr_lag(a, a, 0.1) == 0);
  }

  TEST_CASE("scaled delayed copy peaks at the delay") {
    const auto a = testing::gaussian(8000, 2);
    CHECK(xcorr_lag(SampleBlock(a, 8000.0), SampleBlock(delayed(a, 100, 0.5), 8000.0), 0.1) == 100);
    CHECK(xcorr_lag(SampleBlock(delayed(a, 100), 8000.0), SampleBlock(a, 8000.0), 0.1) == -100);
  }

  TEST_CASE("noisy delayed copy at 10 dB SNR over 100 seeds") {
    const SampleBlock tool = demo_tool();
    const double noise_sigma = std::sqrt(variance(tool.samples) / 10.0);
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      auto b = delayed(tool.samples, 100);
      const auto n = testing::gaussian(b.size(), 1000 + seed, noise_sigma);
      for (std::size_t k = 0; k < b.size(); ++k) b[k] += n[k];
      const auto lag = xcorr_lag(tool, SampleBlock(b, 8000.0), 0.1);
      if (std::abs(lag - 100) <= 1) ++hits;
    }
    CHECK(hits == 100);
  }

  TEST_CASE("FFT correlation matches a brute-force oracle") {
    // Large enough to take the FFT path.
    const auto a = testing::gaussian(40000, 3);
    auto b = delayed(a, 321, 0.8);
    const auto n = testing::gaussian(b.size(), 4, 0.5);
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += n[k];
    const std::int64_t max_lag = 1000;
    const auto c = xcorr_normalized(SampleBlock(a, 8000.0), SampleBlock(b, 8000.0), max_lag);
    REQUIRE(c.size() == 2001);
    for (std::int64_t lag : {-1000, -517, -1, 0, 1, 320, 321, 322, 999, 1000}) {
      CAPTURE(lag);
      CHECK(c[static_cast<std::size_t>(lag + max_lag)] == doctest::Approx(oracle_xcorr(a, b, lag)).epsilon(1e-9));
    }
    // Small inputs take the direct path.
    const auto s = testing::gaussian(300, 5), t = testing::gaussian(300, 6);
    const auto d = xcorr_normalized(SampleBlock(s, 8000.0), SampleBlock(t, 8000.0), 20);
    for (std::int64_t lag = -20; lag <= 20; ++lag) {
      CHECK(d[static_cast<std::size_t>(lag + 20)] == doctest::Approx(oracle_xcorr(s, t, lag)).epsilon(1e-12));
    }
  }

  TEST_CASE("cross-correlation errors") {
    const SampleBlock a(testing::gaussian(100, 1), 8000.0);
    CHECK_THROWS_AS(xcorr_lag(a, SampleBlock(std::vector<double>(100, 2.0), 8000.0), 0.001), AnalysisError);
    CHECK_THROWS_AS(xcorr_lag(a, SampleBlock(testing::gaussian(100, 2), 4000.0), 0.001), ContractError);
    CHECK_THROWS_AS(xcorr_lag(a, a, 1.0), ContractError);
  }

  TEST_CASE("aligned r basics") {
    const auto a = testing::gaussian(5000, 7);
    std::vector<double> affine(a.size()), neg(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      affine[k] = 2.0 * a[k] + 3.0;
      neg[k] = -a[k];
    }
    CHECK(aligned_r(SampleBlock(a, 8000.0), SampleBlock(affine, 8000.0), 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(aligned_r(SampleBlock(a, 8000.0), SampleBlock(neg, 8000.0), 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(aligned_r(SampleBlock(a, 8000.0), SampleBlock(delayed(a, 40), 8000.0), 40) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(aligned_r(SampleBlock(a, 8000.0), SampleBlock(std::vector<double>(5000, 1.0), 8000.0), 0),
                    AnalysisError);
  }

  TEST_CASE("independent noise is uncorrelated") {
    const SampleBlock a(testing::gaussian(100000, 8), 8000.0), b(testing::gaussian(100000, 9), 8000.0);
    CHECK(std::abs(aligned_r(a, b, 0)) < 0.02);
  }

  TEST_CASE("a signal against itself") {
    const SampleBlock x = demo_tool();
    const FidelityReport r = fidelity_report(x, x);
    CHECK(r.r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.lag_samples == 0);
    CHECK(r.delay_s == 0.0);
  }

  TEST_CASE("a silent handle is an error") {
    const SampleBlock x = demo_tool();
    CHECK_THROWS_AS(fidelity_report(x, SampleBlock(std::vector<double>(x.size(), 0.0), 8000.0)), AnalysisError);
  }

  TEST_CASE("filtered delayed loopback") {
    const SampleBlock tool = demo_tool();
    BiquadCascade c = design_bandpass({}, 8000.0);
    std::vector<double> filtered(tool.size());
    c.process(tool.samples, filtered);
    const FidelityReport r = fidelity_report(tool, SampleBlock(delayed(filtered, 64), 8000.0));
    CHECK(r.r >= 0.95);
    // The band-pass adds its own dispersion-dependent delay on top of the injected one.
    const double gd = c.group_delay_samples(band_center_hz({}, 8000.0));
    CHECK(r.lag_samples >= 64);
    CHECK(r.lag_samples <= 64 + static_cast<std::int64_t>(std::ceil(gd)) + 1);
    CHECK(r.delay_s == doctest::Approx(static_cast<double>(r.lag_samples) / 8000.0));

    const FidelityReport plain = fidelity_report(tool, SampleBlock(delayed(tool.samples, 64), 8000.0));
    CHECK(plain.lag_samples == 64);
    CHECK(plain.r >= 0.99);
  }

  TEST_CASE("equal-power independent noise gives r near 1/sqrt(2)") {
    const SampleBlock tool = demo_tool();
    const double sigma = std::sqrt(variance(tool.samples));
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto h = tool.samples;
      const auto n = testing::gaussian(h.size(), 500 + seed, sigma);
      for (std::size_t k = 0; k < h.size(); ++k) h[k] += n[k];
      const FidelityReport r = fidelity_report(tool, SampleBlock(h, 8000.0));
      CHECK(std::abs(r.r - 1.0 / std::sqrt(2.0)) <= 0.05);
      mean += r.r / 20.0;
    }
    CHECK(std::abs(mean - 1.0 / std::sqrt(2.0)) <= 0.02);
  }

  TEST_CASE("report formatting") {
    const std::vector<FidelityReport> rs{{"left", 0.97, 67, 67.0 / 8000.0}};
    CHECK(reports_csv(rs).rfind("channel,", 0) == 0);
    CHECK(reports_text(rs).find("left") != std::string::npos);
  }
}
