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
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vibromix/signal.hpp"

namespace vibromix::net {

/// Wire frame: u32 LE payload length, then tool u8, sample index u64 LE and
/// x, y, z as f32 LE.
inline constexpr std::size_t kFramePayload = 21;

struct Frame {
  std::uint8_t tool = 0;
  std::uint64_t index = 0;
  std::array<float, 3> xyz{};
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
/// Decodes a payload (without the length prefix). Throws ParseError when
/// shorter than kFramePayload; trailing bytes are ignored.
Frame decode_payload(std::span<const std::uint8_t> payload);

/// "host:port" -> (host, port). Throws BuildError when malformed.
std::pair<std::string, std::uint16_t> split_address(const std::string& address);

/// TCP client that buffers frames per tool. The first frame seen for a tool
/// maps to the stream position being read when it arrives.
class FrameClient {
 public:
  /// Connects synchronously; throws BuildError when unreachable.
  explicit FrameClient(const std::string& address);
  ~FrameClient();
  FrameClient(const FrameClient&) = delete;
  FrameClient& operator=(const FrameClient&) = delete;

  /// Fills [start, start + x.size()) for `tool`; gaps are zero-filled and
  /// returned as the underrun count. Consumed samples are released.
  std::size_t read(std::uint8_t tool, std::int64_t start, std::span<double> x,
                   std::span<double> y, std::span<double> z);

  /// Samples buffered at or after `start` without a gap.
  std::size_t available(std::uint8_t tool, std::int64_t start) const;
  bool connected() const;
  std::uint64_t frames_received() const;
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Single-connection frame server. Listens on construction (port 0 picks an
/// ephemeral port) and streams the given tools to the first client.
class FrameServer {
 public:
  explicit FrameServer(std::uint16_t port = 0);
  ~FrameServer();
  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;

  std::uint16_t port() const;

  /// Starts a background sender. `paced` sends in real time in chunks of
  /// `chunk` samples; otherwise everything is sent as fast as possible.
  /// Samples listed in `drop` are skipped to simulate loss.
  void serve(std::map<std::uint8_t, TriAxisSeries> tools, bool paced, std::size_t chunk = 64,
             std::vector<std::uint64_t> drop = {});
  /// Waits for the sender to finish; returns frames sent.
  std::uint64_t wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vibromix::net
