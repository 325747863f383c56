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
#include <string>
#include <vector>

#include "vibromix/signal.hpp"

namespace vibromix::fidelity {

inline constexpr double kDefaultMaxLagS = 0.5;

/// Lag (in samples) maximizing the normalized cross-correlation of the
/// mean-removed signals over [-max_lag, +max_lag]. Positive means `b` trails
/// `a`. Throws ContractError on a rate mismatch or a window that is not
/// shorter than both signals, AnalysisError when either input is constant.
std::int64_t xcorr_lag(const SampleBlock& a, const SampleBlock& b, double max_lag_s);

/// Normalized cross-correlation sequence for lags -max_lag..+max_lag
/// (index 0 corresponds to -max_lag). Values lie in [-1, 1].
std::vector<double> xcorr_normalized(const SampleBlock& a, const SampleBlock& b,
                                     std::int64_t max_lag);

/// Pearson correlation of the overlapping segments a[i], b[i + lag].
/// Throws AnalysisError when the overlap has fewer than 2 samples or zero
/// variance.
double aligned_r(const SampleBlock& a, const SampleBlock& b, std::int64_t lag);

struct FidelityReport {
  std::string channel;
  double r = 0.0;
  std::int64_t lag_samples = 0;
  double delay_s = 0.0;
};

struct FidelityOptions {
  double max_lag_s = kDefaultMaxLagS;
  std::string channel = "left";
};

/// Tool-side and handle-side signals, already mono.
FidelityReport fidelity_report(const SampleBlock& tool, const SampleBlock& handle,
                               const FidelityOptions& options = {});
/// Tri-axis inputs are summed (F3) first.
FidelityReport fidelity_report(const TriAxisSeries& tool, const TriAxisSeries& handle,
                               const FidelityOptions& options = {});
FidelityReport fidelity_report(const TriAxisSeries& tool, const SampleBlock& handle,
                               const FidelityOptions& options = {});

std::string reports_csv(const std::vector<FidelityReport>& reports);
std::string reports_text(const std::vector<FidelityReport>& reports);

}  // namespace vibromix::fidelity
