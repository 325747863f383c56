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
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace vibromix {

// Unit conventions used throughout the library:
//   acceleration  m/s^2
//   force         N
//   gain          dB (amplitude, 20*log10)
//   frequency     Hz
//   energy        (unit)^2 * s
// Nothing converts units implicitly; TriAxisSeries::kind records what a
// stream carries.

inline constexpr double kDefaultRate = 8000.0;

enum class SignalKind { acceleration, force, drive };

std::string_view to_string(SignalKind kind);
SignalKind signal_kind_from_string(std::string_view name);

/// A run of uniformly sampled values. `start_index` is the offset of the
/// first sample from the stream origin.
struct SampleBlock {
  std::vector<double> samples;
  double rate = kDefaultRate;
  std::int64_t start_index = 0;

  SampleBlock() = default;
  SampleBlock(std::vector<double> values, double rate_hz, std::int64_t start = 0);

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration() const noexcept { return static_cast<double>(samples.size()) / rate; }
  std::span<const double> view() const noexcept { return samples; }
};

/// Three equal-length axes sampled at one rate.
class TriAxisSeries {
 public:
  TriAxisSeries() = default;
  TriAxisSeries(std::vector<double> x, std::vector<double> y, std::vector<double> z,
                double rate, SignalKind kind = SignalKind::acceleration);

  /// All-zero series of `n` samples.
  static TriAxisSeries zeros(std::size_t n, double rate,
                             SignalKind kind = SignalKind::acceleration);

  const std::vector<double>& x() const noexcept { return axes_[0]; }
  const std::vector<double>& y() const noexcept { return axes_[1]; }
  const std::vector<double>& z() const noexcept { return axes_[2]; }
  const std::vector<double>& axis(std::size_t i) const { return axes_.at(i); }
  std::vector<double>& mutable_axis(std::size_t i) { return axes_.at(i); }

  double rate() const noexcept { return rate_; }
  SignalKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return axes_[0].size(); }
  bool empty() const noexcept { return axes_[0].empty(); }
  double duration() const noexcept { return static_cast<double>(size()) / rate_; }

  /// Per-axis scaling; returns a new series.
  TriAxisSeries scaled(double k) const;

  /// Adds `other` into this series starting at sample `offset`. The series is
  /// extended with zeros when `other` runs past the end.
  void accumulate(const TriAxisSeries& other, std::size_t offset);

  friend bool operator==(const TriAxisSeries&, const TriAxisSeries&) = default;

 private:
  std::array<std::vector<double>, 3> axes_;
  double rate_ = kDefaultRate;
  SignalKind kind_ = SignalKind::acceleration;
};

/// Samples in [t0, t1). Boundaries are converted to indices with round().
/// Throws RangeError unless 0 <= t0 < t1 <= duration.
TriAxisSeries slice(const TriAxisSeries& series, double t0, double t1);

/// Index-based variant of slice over [first, last).
TriAxisSeries slice_samples(const TriAxisSeries& series, std::size_t first, std::size_t last);

/// Concatenation of two series with the same rate and kind.
TriAxisSeries concat(const TriAxisSeries& a, const TriAxisSeries& b);

/// Per-sample Euclidean norm sqrt(x^2 + y^2 + z^2).
SampleBlock magnitude(const TriAxisSeries& series);

}  // namespace vibromix
