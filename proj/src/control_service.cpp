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

#include "vibromix/control_service.hpp"

#include <atomic>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "vibromix/diagnostics.hpp"
#include "vibromix/error.hpp"

namespace vibromix {
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::uint16_t resolve_control_port(std::optional<int> flag) {
  auto check = [](long v, const std::string& what) {
    if (v < 0 || v > 65535) throw SchemaError(what + " port " + std::to_string(v) + " out of range");
    return static_cast<std::uint16_t>(v);
  };
  if (flag) return check(*flag, "--port");
  if (const char* env = std::getenv("VIBROMIX_PORT"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0') throw SchemaError(std::string("VIBROMIX_PORT '") + env + "' is not a number");
    return check(v, "VIBROMIX_PORT");
  }
  return kDefaultControlPort;
}

namespace {

class WsSession;

struct Shared {
  Pipeline* pipeline = nullptr;
  ServiceOptions options;
  std::mutex mutex;
  std::vector<std::weak_ptr<WsSession>> sessions;
  std::atomic<std::uint64_t> next_client{1};
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  nlohmann::json status() const {
    nlohmann::json j = to_json(pipeline->status());
    j["config"] = to_json(pipeline->config());
    j["channels"] = to_json(pipeline->telemetry())["channels"];
    j["service_uptime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return j;
  }
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
      : ws_(std::move(socket)), shared_(std::move(shared)) {
    beast::error_code ec;
    const auto ep = beast::get_lowest_layer(ws_).socket().remote_endpoint(ec);
    client_ = "ws" + std::to_string(shared_->next_client++) +
              (ec ? std::string{} : "@" + ep.address().to_string() + ":" + std::to_string(ep.port()));
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      {
        std::lock_guard lock(self->shared_->mutex);
        self->shared_->sessions.push_back(self);
      }
      self->read();
    });
  }

  /// Called on the I/O thread by the telemetry timer.
  void telemetry(const Telemetry& t, double wall_s) {
    if (!subscribed_ || closed_) return;
    nlohmann::json j = to_json(t);
    j["type"] = "telemetry";
    j["seq"] = seq_++;
    j["stream_time_s"] = j["timestamp"];
    j["timestamp"] = wall_s;
    send(j.dump(), true);
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
  }

  /// Drops the TCP connection. Only safe once the I/O thread has stopped.
  void shutdown() {
    closed_ = true;
    beast::error_code ec;
    auto& sock = beast::get_lowest_layer(ws_).socket();
    sock.shutdown(tcp::socket::shutdown_both, ec);
    sock.close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->send(self->handle(text), false);
      self->read();
    });
  }

  std::string handle(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& ex) {
      return nlohmann::json{{"type", "error"}, {"id", nullptr}, {"error", std::string("malformed JSON: ") + ex.what()}}
          .dump();
    }
    nlohmann::json id = j.is_object() && j.contains("id") ? j.at("id") : nlohmann::json();
    ControlMessage msg;
    try {
      msg = parse_control_message(j);
    } catch (const Error& ex) {
      nlohmann::json e{{"type", "error"}, {"id", id}, {"error", ex.what()}};
      if (j.is_object() && j.contains("op")) e["op"] = j.at("op");
      return e.dump();
    }
    msg.client = client_;
    Ack ack;
    try {
      ack = shared_->pipeline->update_param(msg);
    } catch (const std::exception& ex) {
      ack = Ack::failure(msg, ex.what());
    }
    if (ack.ok && msg.op == ControlOp::subscribe_levels) {
      subscribed_ = !(msg.value.is_boolean() && !msg.value.get<bool>());
      ack.value = subscribed_;
    }
    return to_json(ack).dump();
  }

  void send(std::string frame, bool droppable) {
    if (closed_) return;
    if (droppable && queue_.size() >= shared_->options.max_backlog) return;
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) write();
  }

  void write() {
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->closed_ = true;
                        self->queue_.clear();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Shared> shared_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::string client_;
  std::uint64_t seq_ = 0;
  bool subscribed_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
      : stream_(std::move(socket)), shared_(std::move(shared)) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->shutdown();
      self->dispatch();
    });
  }

  void dispatch() {
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      if (target == "/control") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), shared_)->run(std::move(req_));
        return;
      }
      return respond(http::status::not_found, R"({"error":"websocket endpoint is /control"})");
    }
    if (target == "/status" || target.rfind("/status?", 0) == 0) {
      if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
        return respond(http::status::method_not_allowed, R"({"error":"use GET"})");
      }
      return respond(http::status::ok, shared_->status().dump());
    }
    if (target == "/schema") return respond(http::status::ok, control_protocol_schema().dump());
    respond(http::status::not_found, R"({"error":"not found"})");
  }

  void respond(http::status status, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, "application/json");
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) return self->shutdown();
      self->read();
    });
  }

  void shutdown() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  std::shared_ptr<Shared> shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct ControlService::Impl {
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  asio::steady_timer timer{io};
  std::chrono::steady_clock::time_point next_tick;
  std::shared_ptr<Shared> shared = std::make_shared<Shared>();
  std::thread thread;
  std::atomic<bool> stopped{false};

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != asio::error::operation_aborted) warn("control service accept: " + ec.message());
        if (!acceptor.is_open()) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), shared)->run();
      }
      accept();
    });
  }

  void tick() {
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / shared->options.telemetry_hz));
    next_tick += period;
    timer.expires_at(next_tick);
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      const Telemetry t = shared->pipeline->telemetry();
      const double wall =
          std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
      std::vector<std::shared_ptr<WsSession>> live;
      {
        std::lock_guard lock(shared->mutex);
        auto& s = shared->sessions;
        s.erase(std::remove_if(s.begin(), s.end(), [](const auto& w) { return w.expired(); }), s.end());
        for (auto& w : s) {
          if (auto p = w.lock()) live.push_back(std::move(p));
        }
      }
      for (auto& p : live) p->telemetry(t, wall);
      tick();
    });
  }
};

ControlService::ControlService(Pipeline& pipeline, ServiceOptions options)
    : impl_(std::make_shared<Impl>()) {
  if (!(options.telemetry_hz > 0.0)) throw ContractError("telemetry rate must be positive");
  impl_->shared->pipeline = &pipeline;
  impl_->shared->options = options;
  try {
    const tcp::endpoint ep(asio::ip::make_address(options.host), options.port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen(asio::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& ex) {
    throw BuildError("control service cannot listen on " + options.host + ":" +
                     std::to_string(options.port) + ": " + ex.code().message());
  }
  impl_->accept();
  impl_->next_tick = std::chrono::steady_clock::now();
  impl_->tick();
  impl_->thread = std::thread([impl = impl_.get()] { impl->io.run(); });
}

ControlService::~ControlService() { stop(); }

void ControlService::stop() {
  if (!impl_ || impl_->stopped.exchange(true)) return;
  asio::post(impl_->io, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    impl->timer.cancel();
    std::lock_guard lock(impl->shared->mutex);
    for (auto& w : impl->shared->sessions) {
      if (auto p = w.lock()) p->close();
    }
  });
  // Give close frames a moment, then tear down.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  // Peers still waiting on a close handshake see EOF instead of a silent socket.
  std::lock_guard lock(impl_->shared->mutex);
  for (auto& w : impl_->shared->sessions) {
    if (auto p = w.lock()) p->shutdown();
  }
}

std::uint16_t ControlService::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t ControlService::client_count() const {
  std::lock_guard lock(impl_->shared->mutex);
  std::size_t n = 0;
  for (const auto& w : impl_->shared->sessions) n += !w.expired();
  return n;
}

nlohmann::json ControlService::status_json() const { return impl_->shared->status(); }

}  // namespace vibromix
