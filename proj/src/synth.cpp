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

#include "vibromix/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "vibromix/diagnostics.hpp"
#include "vibromix/error.hpp"
#include "vibromix/filter.hpp"

namespace vibromix::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double tri_rms(const TriAxisSeries& s) {
  if (s.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (double v : s.axis(a)) acc += v * v;
  }
  return std::sqrt(acc / static_cast<double>(s.size()));
}

TriAxisSeries normalized(TriAxisSeries s, double level) {
  const double current = tri_rms(s);
  if (level == 0.0 || current == 0.0) return TriAxisSeries::zeros(s.size(), s.rate(), s.kind());
  return s.scaled(level / current);
}

std::size_t samples_for(double seconds, double rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

double series_energy(const TriAxisSeries& s) {
  double acc = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (double v : s.axis(a)) acc += v * v;
  }
  return acc / s.rate();
}

}  // namespace

TriAxisSeries contact_transient(double amplitude, double frequency_hz, double tau_s,
                                const Direction& direction, double rate) {
  if (!(amplitude > 0.0)) throw ContractError("contact amplitude must be > 0");
  if (!(tau_s > 0.0)) throw ContractError("contact decay tau must be > 0");
  if (!(rate > 0.0)) throw ContractError("sample rate must be positive");
  const double norm = std::hypot(direction[0], direction[1], direction[2]);
  if (std::abs(norm - 1.0) > 1e-6) throw ContractError("contact direction must be unit length");
  if (frequency_hz < 80.0 || frequency_hz > 1000.0) {
    warn("contact frequency " + std::to_string(frequency_hz) +
         " Hz lies outside the 80-1000 Hz feedback band");
  }
  const std::size_t n = samples_for(5.0 * tau_s, rate);
  std::vector<double> axes[3] = {std::vector<double>(n), std::vector<double>(n),
                                 std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) + 0.5) / rate;
    const double v = amplitude * std::exp(-t / tau_s) * std::sin(kTwoPi * frequency_hz * t);
    for (std::size_t a = 0; a < 3; ++a) axes[a][k] = direction[a] * v;
  }
  return TriAxisSeries(std::move(axes[0]), std::move(axes[1]), std::move(axes[2]), rate);
}

double contact_energy_closed_form(double amplitude, double frequency_hz, double tau_s) {
  const double a = 2.0 / tau_s;
  const double b = 2.0 * kTwoPi * frequency_hz;
  const double span = 5.0 * tau_s;
  const double flat = (1.0 - std::exp(-a * span)) / a;
  const std::complex<double> c(-a, b);
  const double oscillating = ((std::exp(c * span) - 1.0) / c).real();
  return amplitude * amplitude * 0.5 * (flat - oscillating);
}

TriAxisSeries motion_noise(double level, double band_low_hz, double band_high_hz,
                           double duration_s, double rate, std::uint64_t seed) {
  if (!(level >= 0.0)) throw ContractError("noise level must be >= 0");
  const std::size_t n = samples_for(duration_s, rate);
  if (level == 0.0) return TriAxisSeries::zeros(n, rate);
  const FilterSpec band{band_low_hz, band_high_hz, 4, false};
  const std::size_t warmup = samples_for(0.25, rate);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> axes[3];
  for (auto& axis : axes) {
    std::vector<double> raw(n + warmup);
    for (double& v : raw) v = gauss(rng);
    BiquadCascade bp = design_bandpass(band, rate);
    bp.process_in_place(raw);
    axis.assign(raw.begin() + static_cast<std::ptrdiff_t>(warmup), raw.end());
  }
  TriAxisSeries s(std::move(axes[0]), std::move(axes[1]), std::move(axes[2]), rate);
  return normalized(std::move(s), level);
}

TriAxisSeries rotation_tone(double level, double rotation_hz, double duration_s, double rate) {
  if (!(level >= 0.0)) throw ContractError("rotation level must be >= 0");
  const std::size_t n = samples_for(duration_s, rate);
  if (level == 0.0) return TriAxisSeries::zeros(n, rate);
  std::vector<double> x(n), y(n), z(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ph = kTwoPi * rotation_hz * static_cast<double>(k) / rate;
    x[k] = std::sin(ph) + 0.5 * std::sin(2.0 * ph) + 0.25 * std::sin(3.0 * ph);
    y[k] = 0.1 * std::sin(ph + 0.7);
    z[k] = 0.1 * std::sin(ph + 1.9);
  }
  return normalized(TriAxisSeries(std::move(x), std::move(y), std::move(z), rate), level);
}

TriAxisSeries apply_mixing(const TriAxisSeries& series, const MixingMatrix& m) {
  const std::size_t n = series.size();
  std::vector<double> out[3] = {std::vector<double>(n), std::vector<double>(n),
                                std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double in[3] = {series.x()[k], series.y()[k], series.z()[k]};
    for (std::size_t r = 0; r < 3; ++r) {
      out[r][k] = m[r][0] * in[0] + m[r][1] * in[1] + m[r][2] * in[2];
    }
  }
  return TriAxisSeries(std::move(out[0]), std::move(out[1]), std::move(out[2]), series.rate(),
                       series.kind());
}

MixingMatrix identity_mixing() { return attenuation(1.0); }

MixingMatrix attenuation(double gain) {
  MixingMatrix m{};
  for (std::size_t i = 0; i < 3; ++i) m[i][i] = gain;
  return m;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::contact: return "contact";
    case EventKind::motion: return "motion";
    case EventKind::rotation: return "rotation";
  }
  return "contact";
}

EventKind event_kind_from_string(const std::string& name) {
  if (name == "contact") return EventKind::contact;
  if (name == "motion") return EventKind::motion;
  if (name == "rotation") return EventKind::rotation;
  throw SchemaError("unknown event kind '" + name + "'");
}

void validate(const ScenarioScript& script) {
  if (!(script.rate > 0.0)) throw SchemaError("scenario rate must be positive");
  if (!(script.duration > 0.0)) throw SchemaError("scenario duration must be positive");
  double previous = -1.0;
  for (std::size_t i = 0; i < script.events.size(); ++i) {
    const auto& e = script.events[i];
    const std::string where = "event " + std::to_string(i) + ": ";
    if (e.t0 < previous) throw SchemaError(where + "events must be sorted by t0");
    previous = e.t0;
    if (e.t0 < 0.0 || e.t0 >= script.duration) throw SchemaError(where + "t0 outside scenario");
    if (std::find(script.tools.begin(), script.tools.end(), e.tool) == script.tools.end()) {
      throw SchemaError(where + "unknown tool '" + e.tool + "'");
    }
    if (e.kind == EventKind::contact) {
      const double norm = std::hypot(e.direction[0], e.direction[1], e.direction[2]);
      if (std::abs(norm - 1.0) > 1e-6) throw SchemaError(where + "direction must be unit norm");
      if (!(e.amplitude > 0.0) || !(e.tau > 0.0)) {
        throw SchemaError(where + "contact needs amplitude > 0 and tau > 0");
      }
      if (e.t0 + 5.0 * e.tau > script.duration + 1e-12) {
        throw SchemaError(where + "contact decay (5 tau) runs past the scenario end");
      }
    } else if (!(e.level >= 0.0) || !(e.duration > 0.0)) {
      throw SchemaError(where + "motion/rotation need level >= 0 and duration > 0");
    }
  }
  for (const auto& [tool, m] : script.mixing) {
    if (std::find(script.tools.begin(), script.tools.end(), tool) == script.tools.end()) {
      throw SchemaError("mixing matrix for unknown tool '" + tool + "'");
    }
  }
}

ScenarioScript script_from_json(const nlohmann::json& j) {
  ScenarioScript s;
  try {
    s.rate = j.value("rate", kDefaultRate);
    s.duration = j.at("duration").get<double>();
    s.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("tools")) s.tools = j.at("tools").get<std::vector<std::string>>();
    if (j.contains("noise_floor")) s.noise_floor = NoiseFloor{j.at("noise_floor").at("level")};
    if (j.contains("mixing")) {
      for (const auto& [tool, rows] : j.at("mixing").items()) {
        s.mixing[tool] = rows.get<MixingMatrix>();
      }
    }
    for (const auto& je : j.value("events", nlohmann::json::array())) {
      ScenarioEvent e;
      e.t0 = je.at("t0").get<double>();
      e.kind = event_kind_from_string(je.at("kind").get<std::string>());
      e.tool = je.value("tool", std::string("left"));
      e.amplitude = je.value("amplitude", e.amplitude);
      e.frequency = je.value("frequency", e.frequency);
      e.tau = je.value("tau", e.tau);
      if (je.contains("direction")) e.direction = je.at("direction").get<Direction>();
      e.duration = je.value("duration", e.duration);
      e.level = je.value("level", e.level);
      if (je.contains("band")) {
        const auto band = je.at("band").get<std::array<double, 2>>();
        e.band_low = band[0];
        e.band_high = band[1];
      }
      e.rotation_hz = je.value("rotation_hz", e.rotation_hz);
      s.events.push_back(e);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("scenario script: ") + ex.what());
  }
  validate(s);
  return s;
}

nlohmann::json to_json(const ScenarioScript& s) {
  nlohmann::json j;
  j["rate"] = s.rate;
  j["duration"] = s.duration;
  j["seed"] = s.seed;
  j["tools"] = s.tools;
  if (s.noise_floor) j["noise_floor"] = {{"level", s.noise_floor->level}};
  if (!s.mixing.empty()) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [tool, rows] : s.mixing) m[tool] = rows;
    j["mixing"] = m;
  }
  auto events = nlohmann::json::array();
  for (const auto& e : s.events) {
    nlohmann::json je{{"t0", e.t0}, {"kind", to_string(e.kind)}, {"tool", e.tool}};
    if (e.kind == EventKind::contact) {
      je["amplitude"] = e.amplitude;
      je["frequency"] = e.frequency;
      je["tau"] = e.tau;
      je["direction"] = e.direction;
    } else {
      je["duration"] = e.duration;
      je["level"] = e.level;
      if (e.kind == EventKind::motion) je["band"] = {e.band_low, e.band_high};
      if (e.kind == EventKind::rotation) je["rotation_hz"] = e.rotation_hz;
    }
    events.push_back(je);
  }
  j["events"] = events;
  return j;
}

ScenarioScript load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario script '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& ex) {
    throw SchemaError("scenario script '" + path + "': " + ex.what());
  }
  return script_from_json(j);
}

RenderedScenario render_scenario(const ScenarioScript& script) {
  validate(script);
  const std::size_t n = samples_for(script.duration, script.rate);
  RenderedScenario out;
  for (const auto& tool : script.tools) out.tools.emplace(tool, TriAxisSeries::zeros(n, script.rate));

  for (std::size_t i = 0; i < script.events.size(); ++i) {
    const auto& e = script.events[i];
    const auto onset = static_cast<std::size_t>(std::llround(e.t0 * script.rate));
    TriAxisSeries piece;
    switch (e.kind) {
      case EventKind::contact:
        piece = contact_transient(e.amplitude, e.frequency, e.tau, e.direction, script.rate);
        break;
      case EventKind::motion:
        piece = motion_noise(e.level, e.band_low, e.band_high, e.duration, script.rate,
                             script.seed * 1000003ULL + i);
        break;
      case EventKind::rotation:
        piece = rotation_tone(e.level, e.rotation_hz, e.duration, script.rate);
        break;
    }
    if (onset + piece.size() > n) piece = slice_samples(piece, 0, n - onset);
    GroundTruthEvent gt;
    gt.index = i;
    gt.tool = e.tool;
    gt.kind = e.kind;
    gt.t0 = e.t0;
    gt.onset_sample = static_cast<std::int64_t>(onset);
    gt.end_sample = static_cast<std::int64_t>(onset + piece.size());
    gt.energy = series_energy(piece);
    out.events.push_back(gt);
    out.tools.at(e.tool).accumulate(piece, onset);
  }

  if (script.noise_floor && script.noise_floor->level > 0.0) {
    std::size_t t = 0;
    for (auto& [tool, series] : out.tools) {
      std::mt19937_64 rng(script.seed * 7919ULL + 17ULL * ++t);
      std::normal_distribution<double> gauss(0.0, script.noise_floor->level / std::sqrt(3.0));
      for (std::size_t a = 0; a < 3; ++a) {
        for (double& v : series.mutable_axis(a)) v += gauss(rng);
      }
    }
  }

  for (const auto& [tool, m] : script.mixing) {
    out.tools.at(tool) = apply_mixing(out.tools.at(tool), m);
  }
  return out;
}

std::string ground_truth_csv(const std::vector<GroundTruthEvent>& events) {
  std::ostringstream os;
  os.precision(17);
  os << "index,tool,kind,t0_s,onset_sample,end_sample,energy\n";
  for (const auto& e : events) {
    os << e.index << ',' << e.tool << ',' << to_string(e.kind) << ',' << e.t0 << ','
       << e.onset_sample << ',' << e.end_sample << ',' << e.energy << '\n';
  }
  return os.str();
}

ScenarioScript demo_script(std::uint64_t seed, double rate) {
  ScenarioScript s;
  s.rate = rate;
  s.duration = 10.0;
  s.seed = seed;
  const double freqs[] = {300.0, 400.0, 500.0};
  const Direction dirs[] = {{1.0, 0.0, 0.0}, {0.0, 0.6, 0.8}, {0.48, 0.6, 0.64}};
  for (const std::string tool : {"left", "right"}) {
    ScenarioEvent m;
    m.t0 = tool == "left" ? 0.0 : 0.5;
    m.kind = EventKind::motion;
    m.tool = tool;
    m.duration = 9.0;
    m.level = 0.02;
    m.band_low = 80.0;
    m.band_high = 300.0;
    s.events.push_back(m);
  }
  for (int k = 0; k < 18; ++k) {
    ScenarioEvent c;
    c.t0 = 0.6 + 0.5 * k;
    c.kind = EventKind::contact;
    c.tool = k % 2 == 0 ? "left" : "right";
    c.amplitude = 2.0 + 0.5 * (k % 3);
    c.frequency = freqs[k % 3];
    c.tau = 0.025;
    c.direction = dirs[(k / 2) % 3];
    s.events.push_back(c);
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.t0 < b.t0; });
  s.noise_floor = NoiseFloor{0.005};
  return s;
}

}  // namespace vibromix::synth
