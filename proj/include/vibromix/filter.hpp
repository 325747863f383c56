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

#include <complex>
#include <span>
#include <vector>

#include "vibromix/signal.hpp"

namespace vibromix {

/// Band edges of a Butterworth band-pass. `order` is the prototype order,
/// i.e. poles per skirt; the band-pass has 2*order poles and is realized as
/// `order` second-order sections.
struct FilterSpec {
  double low_cut = 80.0;
  double high_cut = 1000.0;
  int order = 4;
  bool bypass = false;

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// Throws DesignError when the spec cannot be realized at `rate`.
void validate(const FilterSpec& spec, double rate);

/// Normalized second-order section, a0 == 1.
///   y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z) const;
  /// Moduli of the two poles.
  std::pair<double, double> pole_moduli() const;
};

/// Cascade of biquads with transposed direct-form II state. State survives
/// across process() calls, so a stream may be cut into blocks of any size.
class BiquadCascade {
 public:
  BiquadCascade() = default;
  BiquadCascade(std::vector<Biquad> sections, double rate);

  /// A pass-through cascade with no sections.
  static BiquadCascade identity(double rate);

  const std::vector<Biquad>& sections() const noexcept { return sections_; }
  double rate() const noexcept { return rate_; }
  bool is_identity() const noexcept { return sections_.empty(); }

  void reset();
  /// Copies delay-line state from `other` when the section counts agree.
  void adopt_state(const BiquadCascade& other);

  void process(std::span<const double> in, std::span<double> out);
  void process_in_place(std::span<double> data) { process(data, data); }

  /// Complex response at `freq_hz`.
  std::complex<double> response(double freq_hz) const;
  double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }
  /// Group delay in samples, from a central difference of the unwrapped phase.
  double group_delay_samples(double freq_hz) const;
  /// True when every pole lies strictly inside the unit circle.
  bool stable() const;

 private:
  struct State {
    double s1 = 0.0, s2 = 0.0;
  };
  std::vector<Biquad> sections_;
  std::vector<State> state_;
  double rate_ = kDefaultRate;
};

/// Butterworth band-pass via bilinear transform with pre-warped band edges.
/// Each section is normalized to unit gain at the digital band center, so
/// the cascade's passband peak is 1. A bypass spec yields the identity.
BiquadCascade design_bandpass(const FilterSpec& spec, double rate);

/// Geometric band center in Hz after pre-warping, where the gain is exactly 1.
double band_center_hz(const FilterSpec& spec, double rate);

/// Causal filtering of a block. Throws ContractError on a rate mismatch.
SampleBlock filter_block(BiquadCascade& cascade, const SampleBlock& block);

}  // namespace vibromix
