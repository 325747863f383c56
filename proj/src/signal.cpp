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

#include "vibromix/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vibromix/error.hpp"

namespace vibromix {

std::string_view to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::acceleration: return "acceleration";
    case SignalKind::force: return "force";
    case SignalKind::drive: return "drive";
  }
  return "acceleration";
}

SignalKind signal_kind_from_string(std::string_view name) {
  if (name == "acceleration") return SignalKind::acceleration;
  if (name == "force") return SignalKind::force;
  if (name == "drive") return SignalKind::drive;
  throw SchemaError("unknown signal kind '" + std::string(name) + "'");
}

SampleBlock::SampleBlock(std::vector<double> values, double rate_hz, std::int64_t start)
    : samples(std::move(values)), rate(rate_hz), start_index(start) {
  if (!(rate > 0.0)) throw ContractError("sample rate must be positive");
}

TriAxisSeries::TriAxisSeries(std::vector<double> x, std::vector<double> y,
                             std::vector<double> z, double rate, SignalKind kind)
    : axes_{std::move(x), std::move(y), std::move(z)}, rate_(rate), kind_(kind) {
  if (!(rate_ > 0.0)) throw ContractError("sample rate must be positive");
  if (axes_[0].size() != axes_[1].size() || axes_[0].size() != axes_[2].size()) {
    throw ContractError("tri-axis series requires equal-length axes");
  }
}

TriAxisSeries TriAxisSeries::zeros(std::size_t n, double rate, SignalKind kind) {
  return TriAxisSeries(std::vector<double>(n), std::vector<double>(n),
                       std::vector<double>(n), rate, kind);
}

TriAxisSeries TriAxisSeries::scaled(double k) const {
  TriAxisSeries out = *this;
  for (auto& axis : out.axes_) {
    for (double& v : axis) v *= k;
  }
  return out;
}

void TriAxisSeries::accumulate(const TriAxisSeries& other, std::size_t offset) {
  if (other.rate_ != rate_) throw ContractError("cannot mix series with different rates");
  const std::size_t needed = offset + other.size();
  if (needed > size()) {
    for (auto& axis : axes_) axis.resize(needed, 0.0);
  }
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& src = other.axes_[a];
    auto& dst = axes_[a];
    for (std::size_t i = 0; i < src.size(); ++i) dst[offset + i] += src[i];
  }
}

TriAxisSeries slice_samples(const TriAxisSeries& series, std::size_t first, std::size_t last) {
  if (first >= last || last > series.size()) {
    throw RangeError("slice [" + std::to_string(first) + ", " + std::to_string(last) +
                     ") outside series of " + std::to_string(series.size()) + " samples");
  }
  auto cut = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first),
                               v.begin() + static_cast<std::ptrdiff_t>(last));
  };
  return TriAxisSeries(cut(series.x()), cut(series.y()), cut(series.z()), series.rate(),
                       series.kind());
}

TriAxisSeries slice(const TriAxisSeries& series, double t0, double t1) {
  const double duration = series.duration();
  if (!(t0 >= 0.0) || !(t0 < t1) || t1 > duration + 0.5 / series.rate()) {
    throw RangeError("slice window [" + std::to_string(t0) + ", " + std::to_string(t1) +
                     ") outside [0, " + std::to_string(duration) + "]");
  }
  const auto first = static_cast<std::size_t>(std::llround(t0 * series.rate()));
  const auto last = static_cast<std::size_t>(std::llround(t1 * series.rate()));
  return slice_samples(series, first, std::min(last, series.size()));
}

TriAxisSeries concat(const TriAxisSeries& a, const TriAxisSeries& b) {
  if (a.rate() != b.rate() || a.kind() != b.kind()) {
    throw ContractError("concat requires matching rate and kind");
  }
  TriAxisSeries out = a;
  out.accumulate(b, a.size());
  return out;
}

SampleBlock magnitude(const TriAxisSeries& series) {
  std::vector<double> out(series.size());
  const auto& x = series.x();
  const auto& y = series.y();
  const auto& z = series.z();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
  }
  return SampleBlock(std::move(out), series.rate());
}

}  // namespace vibromix
