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

#include <filesystem>
#include <fstream>

#include "vibromix/error.hpp"
#include "vibromix/pipeline.hpp"

namespace vibromix {
namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

FilterSpec filter_from_json(const nlohmann::json& j) {
  FilterSpec f;
  f.low_cut = get_or(j, "low_cut", f.low_cut);
  f.high_cut = get_or(j, "high_cut", f.high_cut);
  f.order = get_or(j, "order", f.order);
  f.bypass = get_or(j, "bypass", f.bypass);
  return f;
}

nlohmann::json filter_to_json(const FilterSpec& f) {
  return {{"low_cut", f.low_cut}, {"high_cut", f.high_cut}, {"order", f.order}, {"bypass", f.bypass}};
}

SourceBinding source_from_json(const nlohmann::json& j, const std::string& base_dir) {
  SourceBinding s;
  s.kind = source_kind_from_string(get_or<std::string>(j, "kind", "synth"));
  s.path = resolve(get_or<std::string>(j, "path", ""), base_dir);
  s.tool = get_or<std::string>(j, "tool", "");
  if (j.contains("lanes")) s.lanes = j.at("lanes").get<std::array<int, 3>>();
  s.address = get_or<std::string>(j, "address", "");
  s.tool_id = get_or(j, "tool_id", 0);
  if (j.contains("script")) s.script = synth::script_from_json(j.at("script"));
  return s;
}

nlohmann::json source_to_json(const SourceBinding& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}};
  if (!s.path.empty()) j["path"] = s.path;
  if (!s.tool.empty()) j["tool"] = s.tool;
  if (s.kind == SourceKind::file) j["lanes"] = s.lanes;
  if (s.kind == SourceKind::network) {
    j["address"] = s.address;
    j["tool_id"] = s.tool_id;
  }
  if (s.script) j["script"] = synth::to_json(*s.script);
  return j;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw SchemaError("pipeline config must be a JSON object");
  PipelineConfig c;
  try {
    c.rate = get_or(j, "rate", c.rate);
    c.block_size = get_or(j, "block_size", c.block_size);
    c.align_output = get_or(j, "align_output", c.align_output);
    c.meter_window_ms = get_or(j, "meter_window_ms", c.meter_window_ms);
    c.mailbox_capacity = get_or(j, "mailbox_capacity", c.mailbox_capacity);
    if (j.contains("sink")) c.sink_path = resolve(j.at("sink").get<std::string>(), base_dir);
    if (j.contains("record")) c.record_path = resolve(j.at("record").get<std::string>(), base_dir);

    // A top-level scenario feeds every channel that has no source of its own.
    std::optional<SourceBinding> shared;
    if (j.contains("scenario")) {
      SourceBinding s;
      s.kind = SourceKind::synth;
      if (j.at("scenario").is_string()) {
        s.path = resolve(j.at("scenario").get<std::string>(), base_dir);
      } else {
        s.script = synth::script_from_json(j.at("scenario"));
      }
      shared = s;
    }

    const nlohmann::json channels =
        j.contains("channels") ? j.at("channels")
                               : nlohmann::json::array({{{"id", "left"}, {"sink_lane", 0}},
                                                        {{"id", "right"}, {"sink_lane", 1}}});
    int lane = 0;
    for (const auto& jc : channels) {
      ChannelConfig ch;
      ch.id = jc.at("id").get<std::string>();
      ch.sink_lane = get_or(jc, "sink_lane", lane);
      ++lane;
      if (jc.contains("source")) {
        ch.source = source_from_json(jc.at("source"), base_dir);
      } else if (shared) {
        ch.source = *shared;
      } else {
        throw SchemaError("channel '" + ch.id + "' has no source and no scenario is configured");
      }
      if (ch.source.tool.empty()) ch.source.tool = ch.id;
      if (jc.contains("mode")) ch.strip.mode = combine_mode_from_string(jc.at("mode").get<std::string>());
      if (jc.contains("filter")) ch.strip.filter = filter_from_json(jc.at("filter"));
      ch.strip.gain_db = get_or(jc, "gain_db", ch.strip.gain_db);
      ch.strip.gate_threshold = get_or(jc, "gate_threshold", ch.strip.gate_threshold);
      ch.strip.ramp_ms = get_or(jc, "ramp_ms", ch.strip.ramp_ms);
      c.channels.push_back(std::move(ch));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("pipeline config: ") + ex.what());
  }
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j{{"rate", c.rate},
                   {"block_size", c.block_size},
                   {"align_output", c.align_output},
                   {"meter_window_ms", c.meter_window_ms},
                   {"mailbox_capacity", c.mailbox_capacity}};
  if (c.sink_path) j["sink"] = *c.sink_path;
  if (c.record_path) j["record"] = *c.record_path;
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& ch : c.channels) {
    channels.push_back({{"id", ch.id},
                        {"sink_lane", ch.sink_lane},
                        {"source", source_to_json(ch.source)},
                        {"mode", to_string(ch.strip.mode)},
                        {"filter", filter_to_json(ch.strip.filter)},
                        {"gain_db", ch.strip.gain_db},
                        {"gate_threshold", ch.strip.gate_threshold},
                        {"ramp_ms", ch.strip.ramp_ms}});
  }
  j["channels"] = channels;
  return j;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open pipeline config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& ex) {
    throw SchemaError("pipeline config '" + path + "': " + ex.what());
  }
  return pipeline_config_from_json(j, fs::path(path).parent_path().string());
}

}  // namespace vibromix
