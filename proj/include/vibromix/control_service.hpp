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
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vibromix/pipeline.hpp"

namespace vibromix {

inline constexpr std::uint16_t kDefaultControlPort = 8765;

/// Port precedence: explicit flag, then VIBROMIX_PORT, then the default.
/// Throws SchemaError for a malformed environment value.
std::uint16_t resolve_control_port(std::optional<int> flag);

struct ServiceOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultControlPort;  ///< 0 picks an ephemeral port
  double telemetry_hz = 10.0;
  /// Queued outbound frames per client beyond which telemetry is dropped.
  std::size_t max_backlog = 32;
};

/// WebSocket control endpoint at /control and JSON status at GET /status.
/// Runs its own I/O thread; the pipeline must outlive the service.
class ControlService {
 public:
  ControlService(Pipeline& pipeline, ServiceOptions options = {});
  ~ControlService();
  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;

  /// Bound port (useful with port 0).
  std::uint16_t port() const;
  std::size_t client_count() const;
  nlohmann::json status_json() const;
  void stop();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace vibromix
