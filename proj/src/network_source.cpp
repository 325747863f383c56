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

#include "vibromix/network_source.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstring>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>

#include "vibromix/diagnostics.hpp"
#include "vibromix/error.hpp"

namespace vibromix::net {
namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void put_f32(std::uint8_t* p, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(p, bits);
}

float get_f32(const std::uint8_t* p) {
  const std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

// Samples for one tool, indexed by stream position (frame index - anchor).
// The first frame lands at the current read position.
struct ToolBuffer {
  std::optional<std::int64_t> anchor;
  std::int64_t front = 0;
  std::deque<std::array<float, 3>> values;
  std::deque<bool> present;

  void insert(std::uint64_t index, const std::array<float, 3>& xyz) {
    if (!anchor) anchor = static_cast<std::int64_t>(index) - front;
    const std::int64_t pos = static_cast<std::int64_t>(index) - *anchor;
    if (pos < front) return;  // arrived after its slot was consumed
    const auto off = static_cast<std::size_t>(pos - front);
    if (off >= values.size()) {
      values.resize(off + 1, {0.0f, 0.0f, 0.0f});
      present.resize(off + 1, false);
    }
    values[off] = xyz;
    present[off] = true;
  }

  void release_before(std::int64_t pos) {
    while (front < pos && !values.empty()) {
      values.pop_front();
      present.pop_front();
      ++front;
    }
    if (values.empty() && front < pos) front = pos;
  }
};

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  std::vector<std::uint8_t> out(4 + kFramePayload);
  put_u32(out.data(), static_cast<std::uint32_t>(kFramePayload));
  out[4] = frame.tool;
  put_u64(out.data() + 5, frame.index);
  for (int a = 0; a < 3; ++a) put_f32(out.data() + 13 + 4 * a, frame.xyz[static_cast<std::size_t>(a)]);
  return out;
}

Frame decode_payload(std::span<const std::uint8_t> payload) {
  if (payload.size() < kFramePayload) {
    throw ParseError("frame payload of " + std::to_string(payload.size()) + " bytes is too short",
                     payload.size());
  }
  Frame f;
  f.tool = payload[0];
  f.index = get_u64(payload.data() + 1);
  for (int a = 0; a < 3; ++a) f.xyz[static_cast<std::size_t>(a)] = get_f32(payload.data() + 9 + 4 * a);
  return f;
}

std::pair<std::string, std::uint16_t> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw BuildError("network address '" + address + "' is not host:port");
  }
  const std::string port = address.substr(colon + 1);
  unsigned long p = 0;
  try {
    std::size_t used = 0;
    p = std::stoul(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::exception&) {
    throw BuildError("network address '" + address + "' has an invalid port");
  }
  if (p == 0 || p > 65535) throw BuildError("network address '" + address + "' has an invalid port");
  return {address.substr(0, colon), static_cast<std::uint16_t>(p)};
}

struct FrameClient::Impl {
  asio::io_context io;
  tcp::socket socket{io};
  std::thread thread;
  mutable std::mutex mutex;
  std::map<std::uint8_t, ToolBuffer> tools;
  std::atomic<bool> connected{false};
  std::atomic<std::uint64_t> frames{0};
  std::array<std::uint8_t, 4> header{};
  std::vector<std::uint8_t> payload;

  void read_header() {
    asio::async_read(socket, asio::buffer(header), [this](boost::system::error_code ec, std::size_t) {
      if (ec) return finish(ec);
      const std::uint32_t len = get_u32(header.data());
      if (len < kFramePayload || len > 4096) {
        warn("network source: bad frame length " + std::to_string(len) + ", closing");
        return finish({});
      }
      payload.resize(len);
      read_payload();
    });
  }

  void read_payload() {
    asio::async_read(socket, asio::buffer(payload), [this](boost::system::error_code ec, std::size_t) {
      if (ec) return finish(ec);
      const Frame f = decode_payload(payload);
      {
        std::lock_guard lock(mutex);
        tools[f.tool].insert(f.index, f.xyz);
      }
      ++frames;
      read_header();
    });
  }

  void finish(boost::system::error_code ec) {
    connected = false;
    if (ec && ec != asio::error::eof && ec != asio::error::operation_aborted) {
      warn("network source: " + ec.message());
    }
    boost::system::error_code ignored;
    socket.close(ignored);
  }
};

FrameClient::FrameClient(const std::string& address) : impl_(std::make_unique<Impl>()) {
  const auto [host, port] = split_address(address);
  try {
    tcp::resolver resolver(impl_->io);
    asio::connect(impl_->socket, resolver.resolve(host, std::to_string(port)));
    impl_->socket.set_option(tcp::no_delay(true));
  } catch (const boost::system::system_error& ex) {
    throw BuildError("network source " + address + " unreachable: " + ex.code().message());
  }
  impl_->connected = true;
  impl_->read_header();
  impl_->thread = std::thread([impl = impl_.get()] { impl->io.run(); });
}

FrameClient::~FrameClient() { close(); }

void FrameClient::close() {
  if (!impl_ || !impl_->thread.joinable()) return;
  asio::post(impl_->io, [impl = impl_.get()] {
    boost::system::error_code ignored;
    impl->socket.close(ignored);
  });
  impl_->thread.join();
  impl_->connected = false;
}

std::size_t FrameClient::read(std::uint8_t tool, std::int64_t start, std::span<double> x,
                              std::span<double> y, std::span<double> z) {
  std::lock_guard lock(impl_->mutex);
  auto& buf = impl_->tools[tool];
  buf.release_before(start);
  std::size_t missing = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::int64_t pos = start + static_cast<std::int64_t>(i);
    const auto off = static_cast<std::size_t>(pos - buf.front);
    if (buf.anchor && pos >= buf.front && off < buf.values.size() && buf.present[off]) {
      const auto& v = buf.values[off];
      x[i] = v[0];
      y[i] = v[1];
      z[i] = v[2];
    } else {
      x[i] = y[i] = z[i] = 0.0;
      ++missing;
    }
  }
  buf.release_before(start + static_cast<std::int64_t>(x.size()));
  return missing;
}

std::size_t FrameClient::available(std::uint8_t tool, std::int64_t start) const {
  std::lock_guard lock(impl_->mutex);
  const auto it = impl_->tools.find(tool);
  if (it == impl_->tools.end() || !it->second.anchor) return 0;
  const auto& buf = it->second;
  std::size_t n = 0;
  for (std::int64_t pos = std::max(start, buf.front);; ++pos) {
    const auto off = static_cast<std::size_t>(pos - buf.front);
    if (off >= buf.values.size() || !buf.present[off]) break;
    ++n;
  }
  return n;
}

bool FrameClient::connected() const { return impl_->connected; }
std::uint64_t FrameClient::frames_received() const { return impl_->frames; }

struct FrameServer::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;
  std::atomic<bool> stopping{false};
  std::atomic<std::uint64_t> sent{0};
};

FrameServer::FrameServer(std::uint16_t port) : impl_(std::make_unique<Impl>()) {
  const tcp::endpoint ep(asio::ip::address_v4::loopback(), port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
}

FrameServer::~FrameServer() { stop(); }

std::uint16_t FrameServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void FrameServer::serve(std::map<std::uint8_t, TriAxisSeries> tools, bool paced, std::size_t chunk,
                        std::vector<std::uint64_t> drop) {
  if (impl_->thread.joinable()) throw ContractError("frame server already serving");
  chunk = std::max<std::size_t>(chunk, 1);
  impl_->thread = std::thread([impl = impl_.get(), tools = std::move(tools), paced, chunk,
                               drop = std::set<std::uint64_t>(drop.begin(), drop.end())] {
    tcp::socket socket(impl->io);
    bool accepted = false;
    bool done = false;
    impl->acceptor.async_accept(socket, [&](boost::system::error_code ec) {
      accepted = !ec;
      done = true;
    });
    while (!done && !impl->stopping) {
      impl->io.restart();
      impl->io.run_for(std::chrono::milliseconds(20));
    }
    if (!accepted) return;
    socket.set_option(tcp::no_delay(true));

    std::size_t length = 0;
    double rate = kDefaultRate;
    for (const auto& [id, s] : tools) {
      length = std::max(length, s.size());
      rate = s.rate();
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::uint8_t> wire;
    boost::system::error_code ec;
    for (std::size_t first = 0; first < length && !impl->stopping; first += chunk) {
      const std::size_t last = std::min(length, first + chunk);
      if (paced) {
        std::this_thread::sleep_until(
            t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                     std::chrono::duration<double>(static_cast<double>(first) / rate)));
      }
      wire.clear();
      std::uint64_t count = 0;
      for (const auto& [id, s] : tools) {
        for (std::size_t i = first; i < std::min(last, s.size()); ++i) {
          if (drop.contains(i)) continue;
          const auto bytes = encode_frame(
              {id, i, {static_cast<float>(s.x()[i]), static_cast<float>(s.y()[i]),
                       static_cast<float>(s.z()[i])}});
          wire.insert(wire.end(), bytes.begin(), bytes.end());
          ++count;
        }
      }
      asio::write(socket, asio::buffer(wire), ec);
      if (ec) break;
      impl->sent += count;
    }
    socket.shutdown(tcp::socket::shutdown_send, ec);
    socket.close(ec);
  });
}

std::uint64_t FrameServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
  return impl_->sent;
}

void FrameServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  boost::system::error_code ec;
  impl_->acceptor.close(ec);
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace vibromix::net
