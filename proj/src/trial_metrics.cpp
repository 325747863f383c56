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

#include "vibromix/trial_metrics.hpp"

#include <cmath>
#include <sstream>

#include "vibromix/channel.hpp"
#include "vibromix/error.hpp"

namespace vibromix::trial {
namespace {

StreamMetrics gated_metrics(const SampleBlock& block, double threshold) {
  const SampleBlock g = gate(block, threshold);
  return {rms(g), zcr(g)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

SampleBlock gate(const SampleBlock& block, double threshold) {
  if (!(threshold >= 0.0)) throw ContractError("gate threshold must be >= 0");
  SampleBlock out = block;
  for (double& v : out.samples) {
    if (std::abs(v) < threshold) v = 0.0;
  }
  return out;
}

double zcr(const SampleBlock& block) {
  if (block.empty()) return 0.0;
  std::size_t crossings = 0;
  int last_sign = 0;
  for (double v : block.samples) {
    const int s = (v > 0.0) - (v < 0.0);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) ++crossings;
    last_sign = s;
  }
  return static_cast<double>(crossings) / block.duration();
}

double rms(const SampleBlock& block) {
  if (block.empty()) return 0.0;
  double acc = 0.0;
  for (double v : block.samples) acc += v * v;
  return std::sqrt(acc / static_cast<double>(block.size()));
}

ToolMetrics tool_metrics(const TriAxisSeries& accel, const TrialOptions& options) {
  ToolMetrics m;
  m.accel = gated_metrics(axis_combine(accel, CombineMode::F3), options.thresholds.accel);
  if (options.accel_stream == AccelStream::per_axis) {
    std::array<StreamMetrics, 3> axes{};
    for (std::size_t a = 0; a < 3; ++a) {
      axes[a] = gated_metrics(SampleBlock(accel.axis(a), accel.rate()), options.thresholds.accel);
    }
    m.per_axis = axes;
  }
  return m;
}

StreamMetrics force_metrics(const TriAxisSeries& force, const TrialOptions& options) {
  const SampleBlock mag = magnitude(force);
  const SampleBlock gated = gate(mag, options.thresholds.force);
  StreamMetrics m;
  m.rms = rms(gated);
  if (options.force_zcr == ForceZcr::magnitude) {
    m.zcr = zcr(gated);
    return m;
  }
  double total = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    SampleBlock axis(force.axis(a), force.rate());
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (gated.samples[i] == 0.0) axis.samples[i] = 0.0;
    }
    total += zcr(axis);
  }
  m.zcr = total / 3.0;
  return m;
}

TrialMetrics trial_report(const io::SessionData& session, const TrialOptions& options) {
  TrialMetrics out;
  out.thresholds = options.thresholds;
  double duration = 0.0;
  for (const auto& tool : options.expected_tools) {
    const auto it = session.raw.find(tool);
    if (it == session.raw.end()) {
      out.omitted.push_back(tool + " acceleration");
      continue;
    }
    out.tools[tool] = tool_metrics(it->second, options);
    duration = std::max(duration, it->second.duration());
  }
  for (const auto& [tool, series] : session.raw) {
    if (!out.tools.contains(tool)) {
      out.tools[tool] = tool_metrics(series, options);
      duration = std::max(duration, series.duration());
    }
  }
  if (session.force) {
    out.force = force_metrics(*session.force, options);
    duration = std::max(duration, session.force->duration());
  } else {
    out.omitted.push_back("force");
  }
  out.completion_time_s = session.end_s ? *session.end_s - session.start_s
                                        : std::max(0.0, duration - session.start_s);
  return out;
}

std::string trials_csv(const std::vector<std::string>& trial_ids,
                       const std::vector<TrialMetrics>& trials,
                       const std::vector<std::string>& tools) {
  std::ostringstream os;
  os << "trial";
  for (const auto& t : tools) os << ',' << t << "_accel_rms," << t << "_accel_zcr";
  os << ",force_rms,force_zcr,completion_time_s,accel_threshold,force_threshold,omitted\n";
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& m = trials[i];
    os << (i < trial_ids.size() ? trial_ids[i] : std::to_string(i + 1));
    for (const auto& t : tools) {
      if (auto it = m.tools.find(t); it != m.tools.end()) {
        os << ',' << fmt(it->second.accel.rms) << ',' << fmt(it->second.accel.zcr);
      } else {
        os << ",,";
      }
    }
    if (m.force) {
      os << ',' << fmt(m.force->rms) << ',' << fmt(m.force->zcr);
    } else {
      os << ",,";
    }
    os << ',' << fmt(m.completion_time_s) << ',' << fmt(m.thresholds.accel) << ','
       << fmt(m.thresholds.force) << ',';
    for (std::size_t k = 0; k < m.omitted.size(); ++k) os << (k ? ";" : "") << m.omitted[k];
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const TrialMetrics& m) {
  nlohmann::json j;
  j["thresholds"] = {{"accel_m_s2", m.thresholds.accel}, {"force_n", m.thresholds.force}};
  j["completion_time_s"] = m.completion_time_s;
  nlohmann::json tools = nlohmann::json::object();
  for (const auto& [id, t] : m.tools) {
    nlohmann::json jt{{"accel_rms", t.accel.rms}, {"accel_zcr_hz", t.accel.zcr}};
    if (t.per_axis) {
      static const char* kAxes[] = {"x", "y", "z"};
      for (std::size_t a = 0; a < 3; ++a) {
        jt["per_axis"][kAxes[a]] = {{"rms", (*t.per_axis)[a].rms}, {"zcr_hz", (*t.per_axis)[a].zcr}};
      }
    }
    tools[id] = jt;
  }
  j["tools"] = tools;
  if (m.force) {
    j["force"] = {{"rms", m.force->rms}, {"zcr_hz", m.force->zcr}};
  } else {
    j["force"] = nullptr;
  }
  j["omitted"] = m.omitted;
  return j;
}

}  // namespace vibromix::trial
