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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vibromix {

enum class ControlOp {
  set_gain,
  set_mode,
  set_filter,
  mute,
  start_record,
  stop_record,
  subscribe_levels,
};

std::string_view to_string(ControlOp op);
std::optional<ControlOp> control_op_from_string(std::string_view name);

/// Live parameter change or service request. `value` is op-specific:
///   set_gain      number (dB)
///   set_mode      "F0" | "F1" | "F3"
///   set_filter    {"low_cut": Hz, "high_cut": Hz, "order": 2|4|8}
///   mute          bool
///   start_record  optional session directory (string)
struct ControlMessage {
  ControlOp op = ControlOp::set_gain;
  std::string channel;
  nlohmann::json value;
  nlohmann::json id;  ///< echoed back in the ack; null when absent
  std::string client = "local";
};

/// Parses a wire object. Throws SchemaError describing the violation.
ControlMessage parse_control_message(const nlohmann::json& j);
nlohmann::json to_json(const ControlMessage& msg);

/// Reply to one ControlMessage. `value` is the applied (possibly clamped)
/// value on success.
struct Ack {
  bool ok = true;
  nlohmann::json id;
  ControlOp op = ControlOp::set_gain;
  std::string channel;
  nlohmann::json value;
  bool clamped = false;
  std::string error;

  static Ack failure(const ControlMessage& msg, std::string reason);
};

nlohmann::json to_json(const Ack& ack);

/// Control message scheduled at a sample position, for offline runs.
struct TimedControl {
  std::int64_t sample = 0;
  ControlMessage message;
};

/// Script format: JSON array of control objects, each with either `t`
/// (seconds) or `sample`. Entries are sorted by position.
std::vector<TimedControl> control_script_from_json(const nlohmann::json& j, double rate);
std::vector<TimedControl> load_control_script(const std::string& path, double rate);

/// JSON Schema for messages accepted on the control endpoint and the frames
/// the service sends back.
nlohmann::json control_protocol_schema();

}  // namespace vibromix
