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

#include "vibromix/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vibromix/error.hpp"

namespace vibromix {

using cplx = std::complex<double>;

void validate(const FilterSpec& spec, double rate) {
  if (spec.bypass) return;
  if (!(rate > 0.0)) throw DesignError("sample rate must be positive");
  const double nyquist = rate / 2.0;
  if (!(spec.low_cut > 0.0)) throw DesignError("low_cut must be > 0 Hz");
  if (!(spec.low_cut < spec.high_cut)) throw DesignError("low_cut must be below high_cut");
  if (!(spec.high_cut < nyquist)) {
    throw DesignError("high_cut " + std::to_string(spec.high_cut) +
                      " Hz is not below Nyquist (" + std::to_string(nyquist) + " Hz)");
  }
  if (spec.order != 2 && spec.order != 4 && spec.order != 8) {
    throw DesignError("filter order must be 2, 4 or 8 (got " + std::to_string(spec.order) + ")");
  }
}

cplx Biquad::response(cplx z) const {
  const cplx zi = 1.0 / z;
  return (b0 + zi * (b1 + zi * b2)) / (1.0 + zi * (a1 + zi * a2));
}

std::pair<double, double> Biquad::pole_moduli() const {
  const double disc = a1 * a1 - 4.0 * a2;
  if (disc < 0.0) {
    const double m = std::sqrt(a2);
    return {m, m};
  }
  const double r = std::sqrt(disc);
  return {std::abs((-a1 + r) / 2.0), std::abs((-a1 - r) / 2.0)};
}

BiquadCascade::BiquadCascade(std::vector<Biquad> sections, double rate)
    : sections_(std::move(sections)), state_(sections_.size()), rate_(rate) {
  if (!(rate_ > 0.0)) throw ContractError("sample rate must be positive");
}

BiquadCascade BiquadCascade::identity(double rate) { return BiquadCascade({}, rate); }

void BiquadCascade::reset() { state_.assign(sections_.size(), State{}); }

void BiquadCascade::adopt_state(const BiquadCascade& other) {
  if (other.state_.size() == state_.size()) state_ = other.state_;
}

void BiquadCascade::process(std::span<const double> in, std::span<double> out) {
  if (in.size() != out.size()) throw ContractError("filter input/output size mismatch");
  if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
  for (std::size_t k = 0; k < sections_.size(); ++k) {
    const Biquad& c = sections_[k];
    double s1 = state_[k].s1;
    double s2 = state_[k].s2;
    for (double& v : out) {
      const double x = v;
      const double y = c.b0 * x + s1;
      s1 = c.b1 * x - c.a1 * y + s2;
      s2 = c.b2 * x - c.a2 * y;
      v = y;
    }
    state_[k].s1 = s1;
    state_[k].s2 = s2;
  }
}

cplx BiquadCascade::response(double freq_hz) const {
  const double w = 2.0 * std::numbers::pi * freq_hz / rate_;
  const cplx z = std::polar(1.0, w);
  cplx h = 1.0;
  for (const auto& s : sections_) h *= s.response(z);
  return h;
}

double BiquadCascade::group_delay_samples(double freq_hz) const {
  const double w = 2.0 * std::numbers::pi * freq_hz / rate_;
  const double dw = 1e-6;
  double delay = 0.0;
  for (const auto& s : sections_) {
    const cplx hi = s.response(std::polar(1.0, w + dw));
    const cplx lo = s.response(std::polar(1.0, w - dw));
    delay -= std::arg(hi / lo) / (2.0 * dw);
  }
  return delay;
}

bool BiquadCascade::stable() const {
  for (const auto& s : sections_) {
    const auto [m1, m2] = s.pole_moduli();
    if (!(m1 < 1.0) || !(m2 < 1.0)) return false;
  }
  return true;
}

double band_center_hz(const FilterSpec& spec, double rate) {
  const double wl = std::tan(std::numbers::pi * spec.low_cut / rate);
  const double wh = std::tan(std::numbers::pi * spec.high_cut / rate);
  return rate / std::numbers::pi * std::atan(std::sqrt(wl * wh));
}

BiquadCascade design_bandpass(const FilterSpec& spec, double rate) {
  if (spec.bypass) return BiquadCascade::identity(rate);
  validate(spec, rate);

  // Pre-warped analog edges for the bilinear map s = (z - 1) / (z + 1).
  const double wl = std::tan(std::numbers::pi * spec.low_cut / rate);
  const double wh = std::tan(std::numbers::pi * spec.high_cut / rate);
  const double bw = wh - wl;
  const double w0sq = wl * wh;
  const int n = spec.order;

  // Lowpass prototype poles map to pole pairs of s^2 - p*bw*s + w0^2 = 0.
  // Keep the upper-half-plane pole of each conjugate pair.
  std::vector<cplx> analog;
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1.0) / (2.0 * n));
    const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0sq);
    for (const cplx s : {(p * bw + disc) / 2.0, (p * bw - disc) / 2.0}) {
      if (s.imag() > 0.0) analog.push_back(s);
    }
  }

  const cplx z_center = std::polar(1.0, 2.0 * std::atan(std::sqrt(w0sq)));
  std::vector<Biquad> sections;
  sections.reserve(analog.size());
  for (const cplx s : analog) {
    const cplx zp = (1.0 + s) / (1.0 - s);
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;  // zeros at z = 1 (DC) and z = -1 (Nyquist)
    q.a1 = -2.0 * zp.real();
    q.a2 = std::norm(zp);
    const double g = 1.0 / std::abs(q.response(z_center));
    q.b0 = g;
    q.b2 = -g;
    sections.push_back(q);
  }
  return BiquadCascade(std::move(sections), rate);
}

SampleBlock filter_block(BiquadCascade& cascade, const SampleBlock& block) {
  if (block.rate != cascade.rate()) {
    throw ContractError("block rate " + std::to_string(block.rate) +
                        " Hz does not match filter design rate " +
                        std::to_string(cascade.rate()) + " Hz");
  }
  SampleBlock out(std::vector<double>(block.size()), block.rate, block.start_index);
  cascade.process(block.samples, out.samples);
  return out;
}

}  // namespace vibromix
