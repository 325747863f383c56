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

#include "vibromix/control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vibromix/error.hpp"

namespace vibromix {

std::string_view to_string(ControlOp op) {
  switch (op) {
    case ControlOp::set_gain: return "set_gain";
    case ControlOp::set_mode: return "set_mode";
    case ControlOp::set_filter: return "set_filter";
    case ControlOp::mute: return "mute";
    case ControlOp::start_record: return "start_record";
    case ControlOp::stop_record: return "stop_record";
    case ControlOp::subscribe_levels: return "subscribe_levels";
  }
  return "set_gain";
}

std::optional<ControlOp> control_op_from_string(std::string_view name) {
  for (ControlOp op : {ControlOp::set_gain, ControlOp::set_mode, ControlOp::set_filter,
                       ControlOp::mute, ControlOp::start_record, ControlOp::stop_record,
                       ControlOp::subscribe_levels}) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

ControlMessage parse_control_message(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("control message must be a JSON object");
  if (!j.contains("op") || !j.at("op").is_string()) {
    throw SchemaError("control message needs a string field 'op'");
  }
  const auto op = control_op_from_string(j.at("op").get<std::string>());
  if (!op) throw SchemaError("unknown op '" + j.at("op").get<std::string>() + "'");
  ControlMessage msg;
  msg.op = *op;
  if (j.contains("id")) msg.id = j.at("id");
  if (j.contains("channel")) {
    if (!j.at("channel").is_string()) throw SchemaError("'channel' must be a string");
    msg.channel = j.at("channel").get<std::string>();
  }
  if (j.contains("value")) msg.value = j.at("value");

  const bool needs_channel = *op == ControlOp::set_gain || *op == ControlOp::set_mode ||
                             *op == ControlOp::set_filter || *op == ControlOp::mute;
  if (needs_channel && msg.channel.empty()) {
    throw SchemaError(std::string(to_string(*op)) + " requires 'channel'");
  }
  switch (*op) {
    case ControlOp::set_gain:
      if (!msg.value.is_number() || !std::isfinite(msg.value.get<double>())) {
        throw SchemaError("set_gain requires a finite numeric 'value' (dB)");
      }
      break;
    case ControlOp::set_mode:
      if (!msg.value.is_string()) throw SchemaError("set_mode requires 'value' of F0, F1 or F3");
      break;
    case ControlOp::set_filter:
      if (!msg.value.is_object() || !msg.value.contains("low_cut") ||
          !msg.value.contains("high_cut") || !msg.value.at("low_cut").is_number() ||
          !msg.value.at("high_cut").is_number()) {
        throw SchemaError("set_filter requires 'value' {low_cut, high_cut[, order]}");
      }
      if (msg.value.contains("order") && !msg.value.at("order").is_number_integer()) {
        throw SchemaError("set_filter 'order' must be an integer");
      }
      break;
    case ControlOp::mute:
      if (!msg.value.is_boolean()) throw SchemaError("mute requires a boolean 'value'");
      break;
    case ControlOp::start_record:
      if (!msg.value.is_null() && !msg.value.is_string()) {
        throw SchemaError("start_record 'value' must be a path string when present");
      }
      break;
    case ControlOp::stop_record:
    case ControlOp::subscribe_levels:
      break;
  }
  return msg;
}

nlohmann::json to_json(const ControlMessage& msg) {
  nlohmann::json j{{"op", to_string(msg.op)}};
  if (!msg.channel.empty()) j["channel"] = msg.channel;
  if (!msg.value.is_null()) j["value"] = msg.value;
  if (!msg.id.is_null()) j["id"] = msg.id;
  return j;
}

Ack Ack::failure(const ControlMessage& msg, std::string reason) {
  Ack a;
  a.ok = false;
  a.id = msg.id;
  a.op = msg.op;
  a.channel = msg.channel;
  a.error = std::move(reason);
  return a;
}

nlohmann::json to_json(const Ack& ack) {
  nlohmann::json j;
  j["type"] = ack.ok ? "ack" : "error";
  j["id"] = ack.id;
  j["op"] = to_string(ack.op);
  if (!ack.channel.empty()) j["channel"] = ack.channel;
  if (ack.ok) {
    j["value"] = ack.value;
    j["clamped"] = ack.clamped;
  } else {
    j["error"] = ack.error;
  }
  return j;
}

std::vector<TimedControl> control_script_from_json(const nlohmann::json& j, double rate) {
  if (!j.is_array()) throw SchemaError("control script must be a JSON array");
  std::vector<TimedControl> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j.at(i);
    TimedControl tc;
    if (e.contains("sample")) {
      tc.sample = e.at("sample").get<std::int64_t>();
    } else if (e.contains("t")) {
      tc.sample = static_cast<std::int64_t>(std::llround(e.at("t").get<double>() * rate));
    } else {
      throw SchemaError("control script entry " + std::to_string(i) + " needs 't' or 'sample'");
    }
    if (tc.sample < 0) throw SchemaError("control script entry " + std::to_string(i) + " is negative");
    tc.message = parse_control_message(e);
    tc.message.client = "script";
    out.push_back(std::move(tc));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TimedControl& a, const TimedControl& b) { return a.sample < b.sample; });
  return out;
}

std::vector<TimedControl> load_control_script(const std::string& path, double rate) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open control script '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& ex) {
    throw SchemaError("control script '" + path + "': " + ex.what());
  }
  return control_script_from_json(j, rate);
}

nlohmann::json control_protocol_schema() {
  return nlohmann::json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "vibromix control protocol",
  "$defs": {
    "request": {
      "type": "object",
      "required": ["op"],
      "properties": {
        "op": {"enum": ["set_gain", "set_mode", "set_filter", "mute",
                        "start_record", "stop_record", "subscribe_levels"]},
        "channel": {"type": "string"},
        "id": {},
        "value": {}
      },
      "allOf": [
        {"if": {"properties": {"op": {"const": "set_gain"}}},
         "then": {"required": ["channel", "value"], "properties": {"value": {"type": "number"}}}},
        {"if": {"properties": {"op": {"const": "set_mode"}}},
         "then": {"required": ["channel", "value"],
                  "properties": {"value": {"enum": ["F0", "F1", "F3"]}}}},
        {"if": {"properties": {"op": {"const": "set_filter"}}},
         "then": {"required": ["channel", "value"],
                  "properties": {"value": {"type": "object", "required": ["low_cut", "high_cut"],
                     "properties": {"low_cut": {"type": "number"}, "high_cut": {"type": "number"},
                                    "order": {"enum": [2, 4, 8]}}}}}},
        {"if": {"properties": {"op": {"const": "mute"}}},
         "then": {"required": ["channel", "value"], "properties": {"value": {"type": "boolean"}}}},
        {"if": {"properties": {"op": {"const": "start_record"}}},
         "then": {"properties": {"value": {"type": ["string", "null"]}}}}
      ]
    },
    "ack": {
      "type": "object",
      "required": ["type", "id", "op", "value", "clamped"],
      "properties": {
        "type": {"const": "ack"}, "id": {}, "op": {"type": "string"},
        "channel": {"type": "string"}, "value": {}, "clamped": {"type": "boolean"}
      }
    },
    "error": {
      "type": "object",
      "required": ["type", "error"],
      "properties": {"type": {"const": "error"}, "id": {}, "op": {"type": "string"},
                     "error": {"type": "string"}}
    },
    "telemetry": {
      "type": "object",
      "required": ["type", "seq", "timestamp", "channels"],
      "properties": {
        "type": {"const": "telemetry"},
        "seq": {"type": "integer", "minimum": 0},
        "timestamp": {"type": "number"},
        "channels": {
          "type": "object",
          "additionalProperties": {
            "type": "object",
            "required": ["pre_rms", "post_rms", "mode", "gain_db"],
            "properties": {"pre_rms": {"type": "number"}, "post_rms": {"type": "number"},
                           "mode": {"enum": ["F0", "F1", "F3"]}, "gain_db": {"type": "number"},
                           "muted": {"type": "boolean"}}
          }
        }
      }
    }
  }
})");
}

}  // namespace vibromix
