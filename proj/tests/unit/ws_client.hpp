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

#include <chrono>
#include <optional>
#include <string>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

namespace testing {

namespace beast = boost::beast;
using tcp = boost::asio::ip::tcp;

/// Blocking WebSocket client for the control endpoint.
class WsClient {
 public:
  explicit WsClient(std::uint16_t port, const std::string& target = "/control") : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    boost::asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1:" + std::to_string(port), target);
  }
  ~WsClient() {
    if (closed_) return;
    ioc_.restart();
    ws_.async_close(beast::websocket::close_code::normal, [](beast::error_code) {});
    ioc_.run_for(std::chrono::seconds(1));
    beast::error_code ec;
    beast::get_lowest_layer(ws_).close(ec);
    ioc_.restart();
    ioc_.poll();
  }

  void send_text(const std::string& text) { ws_.write(boost::asio::buffer(text)); }
  void send(const nlohmann::json& j) { send_text(j.dump()); }

  /// Next frame, or nullopt on timeout or close.
  std::optional<nlohmann::json> receive(std::chrono::milliseconds timeout = std::chrono::milliseconds(3000)) {
    if (closed_) return std::nullopt;
    beast::flat_buffer buffer;
    bool done = false;
    beast::error_code result;
    ws_.async_read(buffer, [&](beast::error_code ec, std::size_t) {
      done = true;
      result = ec;
    });
    ioc_.restart();
    ioc_.run_for(timeout);
    if (!done) {
      // Abandon the connection; a half-read frame cannot be resumed.
      beast::error_code ignored;
      ws_.next_layer().cancel(ignored);
      ioc_.restart();
      ioc_.run();
      closed_ = true;
      return std::nullopt;
    }
    if (result) {
      closed_ = true;
      return std::nullopt;
    }
    return nlohmann::json::parse(beast::buffers_to_string(buffer.data()));
  }

  bool closed() const { return closed_; }

  /// Skips telemetry until a frame of another type arrives.
  std::optional<nlohmann::json> reply() {
    while (auto f = receive()) {
      if ((*f)["type"] != "telemetry") return f;
    }
    return std::nullopt;
  }

 private:
  boost::asio::io_context ioc_;
  beast::websocket::stream<tcp::socket> ws_;
  bool closed_ = false;
};

/// One HTTP GET; returns (status code, body).
inline std::pair<int, std::string> http_get(std::uint16_t port, const std::string& target) {
  boost::asio::io_context ioc;
  tcp::socket socket(ioc);
  tcp::resolver resolver(ioc);
  boost::asio::connect(socket, resolver.resolve("127.0.0.1", std::to_string(port)));
  beast::http::request<beast::http::empty_body> req{beast::http::verb::get, target, 11};
  req.set(beast::http::field::host, "127.0.0.1");
  beast::http::write(socket, req);
  beast::flat_buffer buffer;
  beast::http::response<beast::http::string_body> res;
  beast::http::read(socket, buffer, res);
  beast::error_code ec;
  socket.shutdown(tcp::socket::shutdown_both, ec);
  return {static_cast<int>(res.result_int()), res.body()};
}

}  // namespace testing
