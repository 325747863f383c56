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

#include "vibromix/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <filesystem>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include <pthread.h>
#include <sched.h>

#include "vibromix/diagnostics.hpp"
#include "vibromix/error.hpp"
#include "vibromix/network_source.hpp"

namespace vibromix {
namespace fs = std::filesystem;

namespace {

// Best-effort SCHED_FIFO for the calling thread while a real-time run lasts.
// Without the privilege the thread simply keeps its normal policy.
class RealtimePriority {
 public:
  RealtimePriority() {
    if (pthread_getschedparam(pthread_self(), &policy_, &param_) != 0) return;
    sched_param p{};
    p.sched_priority = sched_get_priority_min(SCHED_FIFO) + 10;
    raised_ = pthread_setschedparam(pthread_self(), SCHED_FIFO, &p) == 0;
  }
  ~RealtimePriority() {
    if (raised_) pthread_setschedparam(pthread_self(), policy_, &param_);
  }
  RealtimePriority(const RealtimePriority&) = delete;
  RealtimePriority& operator=(const RealtimePriority&) = delete;

 private:
  int policy_ = SCHED_OTHER;
  sched_param param_{};
  bool raised_ = false;
};

}  // namespace
using Clock = std::chrono::steady_clock;

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::file: return "file";
    case SourceKind::synth: return "synth";
    case SourceKind::network: return "network";
  }
  return "synth";
}

SourceKind source_kind_from_string(std::string_view name) {
  if (name == "file") return SourceKind::file;
  if (name == "synth") return SourceKind::synth;
  if (name == "network") return SourceKind::network;
  throw SchemaError("unknown source kind '" + std::string(name) + "'");
}

void validate(const PipelineConfig& config) {
  if (!(config.rate > 0.0) || !std::isfinite(config.rate)) throw BuildError("rate must be positive");
  const std::size_t b = config.block_size;
  if (b < 16 || b > 1024 || (b & (b - 1)) != 0) {
    throw BuildError("block_size " + std::to_string(b) + " must be a power of two in [16, 1024]");
  }
  if (config.channels.empty()) throw BuildError("pipeline has no channels");
  if (!(config.meter_window_ms > 0.0)) throw BuildError("meter_window_ms must be positive");
  if (config.mailbox_capacity == 0) throw BuildError("mailbox_capacity must be positive");
  std::set<std::string> ids;
  std::set<int> lanes;
  for (const auto& ch : config.channels) {
    if (ch.id.empty()) throw BuildError("channel id must not be empty");
    if (!ids.insert(ch.id).second) throw BuildError("duplicate channel id '" + ch.id + "'");
    if (ch.sink_lane < 0) throw BuildError("channel '" + ch.id + "' has a negative sink lane");
    if (!lanes.insert(ch.sink_lane).second) {
      throw BuildError("sink lane " + std::to_string(ch.sink_lane) + " is bound to more than one channel");
    }
    try {
      validate(ch.strip, config.rate);
    } catch (const BuildError&) {
      throw;
    } catch (const Error& ex) {
      throw BuildError("channel '" + ch.id + "': " + ex.what());
    }
    const auto& s = ch.source;
    switch (s.kind) {
      case SourceKind::file:
        if (s.path.empty()) throw BuildError("channel '" + ch.id + "': file source needs a path");
        for (int lane : s.lanes) {
          if (lane < 0) throw BuildError("channel '" + ch.id + "': negative source lane");
        }
        break;
      case SourceKind::synth:
        if (!s.script && s.path.empty()) {
          throw BuildError("channel '" + ch.id + "': synth source needs a script or a path");
        }
        break;
      case SourceKind::network:
        net::split_address(s.address);
        if (s.tool_id < 0 || s.tool_id > 255) {
          throw BuildError("channel '" + ch.id + "': network tool_id must be in [0, 255]");
        }
        break;
    }
  }
}

PipelineConfig default_pipeline_config(const synth::ScenarioScript& script) {
  PipelineConfig c;
  c.rate = script.rate;
  int lane = 0;
  for (const std::string id : {"left", "right"}) {
    ChannelConfig ch;
    ch.id = id;
    ch.source.kind = SourceKind::synth;
    ch.source.script = script;
    ch.source.tool = id;
    ch.sink_lane = lane++;
    c.channels.push_back(std::move(ch));
  }
  return c;
}

nlohmann::json to_json(const LatencyReport& l) {
  return {{"buffering_s", l.buffering_s}, {"group_delay_s", l.group_delay_s}, {"total_s", l.total_s()}};
}

nlohmann::json to_json(const Telemetry& t) {
  nlohmann::json channels = nlohmann::json::object();
  for (const auto& c : t.channels) {
    channels[c.id] = {{"pre_rms", c.levels.pre_gain_rms},
                      {"post_rms", c.levels.post_gain_rms},
                      {"mode", to_string(c.mode)},
                      {"gain_db", c.gain_db},
                      {"muted", c.muted}};
  }
  return {{"sample_index", t.sample_index}, {"timestamp", t.timestamp_s}, {"channels", channels}};
}

nlohmann::json to_json(const PipelineStatus& s) {
  return {{"running", s.running},
          {"realtime", s.realtime},
          {"samples", s.samples},
          {"deadline_misses", s.deadline_misses},
          {"underrun_samples", s.underrun_samples},
          {"clamp_count", s.clamp_count},
          {"recording", s.recording},
          {"recording_path", s.recording_path},
          {"uptime_s", s.uptime_s},
          {"latency", to_json(s.latency)}};
}

io::SessionData to_session(const SessionLog& log) {
  io::SessionData d;
  d.rate = log.rate;
  d.raw = log.raw;
  d.post = log.post;
  d.output = log.output;
  d.output_lanes = log.output_lanes;
  d.param_log = log.params;
  d.start_s = 0.0;
  d.end_s = static_cast<double>(log.samples) / log.rate;
  return d;
}

namespace {

class Source {
 public:
  virtual ~Source() = default;
  /// Fills the spans from stream position `start`; returns underrun samples.
  virtual std::size_t read(std::int64_t start, std::span<double> x, std::span<double> y,
                           std::span<double> z) = 0;
  virtual std::optional<std::int64_t> length() const = 0;
};

class SeriesSource final : public Source {
 public:
  explicit SeriesSource(TriAxisSeries series) : series_(std::move(series)) {}

  std::size_t read(std::int64_t start, std::span<double> x, std::span<double> y,
                   std::span<double> z) override {
    const auto len = static_cast<std::int64_t>(series_.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::int64_t k = start + static_cast<std::int64_t>(i);
      if (k < len) {
        const auto u = static_cast<std::size_t>(k);
        x[i] = series_.x()[u];
        y[i] = series_.y()[u];
        z[i] = series_.z()[u];
      } else {
        x[i] = y[i] = z[i] = 0.0;
      }
    }
    return 0;
  }

  std::optional<std::int64_t> length() const override {
    return static_cast<std::int64_t>(series_.size());
  }

 private:
  TriAxisSeries series_;
};

class NetworkSource final : public Source {
 public:
  NetworkSource(std::shared_ptr<net::FrameClient> client, std::uint8_t tool)
      : client_(std::move(client)), tool_(tool) {}

  std::size_t read(std::int64_t start, std::span<double> x, std::span<double> y,
                   std::span<double> z) override {
    return client_->read(tool_, start, x, y, z);
  }

  std::optional<std::int64_t> length() const override { return std::nullopt; }

 private:
  std::shared_ptr<net::FrameClient> client_;
  std::uint8_t tool_;
};

struct SourceCache {
  std::map<std::string, io::SessionData> sessions;
  std::map<std::string, synth::RenderedScenario> scenarios;
  std::map<std::string, std::shared_ptr<net::FrameClient>> clients;
};

void check_rate(const ChannelConfig& ch, double have, double want) {
  if (std::abs(have - want) > 1e-9 * want) {
    std::ostringstream os;
    os << "channel '" << ch.id << "': source rate " << have << " Hz does not match pipeline rate "
       << want << " Hz";
    throw BuildError(os.str());
  }
}

std::unique_ptr<Source> open_source(const ChannelConfig& ch, double rate, SourceCache& cache) {
  const auto& b = ch.source;
  const std::string tool = b.tool.empty() ? ch.id : b.tool;
  try {
    switch (b.kind) {
      case SourceKind::file: {
        if (fs::is_directory(b.path)) {
          auto it = cache.sessions.find(b.path);
          if (it == cache.sessions.end()) it = cache.sessions.emplace(b.path, io::load_session(b.path)).first;
          const auto raw = it->second.raw.find(tool);
          if (raw == it->second.raw.end()) {
            throw BuildError("channel '" + ch.id + "': session " + b.path + " has no tool '" + tool + "'");
          }
          check_rate(ch, raw->second.rate(), rate);
          return std::make_unique<SeriesSource>(raw->second);
        }
        const std::string ext = fs::path(b.path).extension().string();
        if (ext == ".wav" || ext == ".WAV") {
          const io::WavData wav = io::read_wav(b.path);
          check_rate(ch, wav.rate, rate);
          std::array<std::vector<double>, 3> axes;
          for (std::size_t a = 0; a < 3; ++a) {
            const auto lane = static_cast<std::size_t>(b.lanes[a]);
            if (lane >= wav.channels.size()) {
              throw BuildError("channel '" + ch.id + "': " + b.path + " has no lane " + std::to_string(lane));
            }
            axes[a] = wav.channels[lane];
          }
          return std::make_unique<SeriesSource>(
              TriAxisSeries(std::move(axes[0]), std::move(axes[1]), std::move(axes[2]), wav.rate));
        }
        TriAxisSeries s = io::read_recording(b.path);
        check_rate(ch, s.rate(), rate);
        return std::make_unique<SeriesSource>(std::move(s));
      }
      case SourceKind::synth: {
        const std::string key = b.script ? "inline:" + ch.id : b.path;
        auto it = cache.scenarios.find(key);
        if (it == cache.scenarios.end()) {
          const synth::ScenarioScript script = b.script ? *b.script : synth::load_script(b.path);
          check_rate(ch, script.rate, rate);
          it = cache.scenarios.emplace(key, synth::render_scenario(script)).first;
        }
        const auto s = it->second.tools.find(tool);
        if (s == it->second.tools.end()) {
          throw BuildError("channel '" + ch.id + "': scenario has no tool '" + tool + "'");
        }
        return std::make_unique<SeriesSource>(s->second);
      }
      case SourceKind::network: {
        auto it = cache.clients.find(b.address);
        if (it == cache.clients.end()) {
          it = cache.clients.emplace(b.address, std::make_shared<net::FrameClient>(b.address)).first;
        }
        return std::make_unique<NetworkSource>(it->second, static_cast<std::uint8_t>(b.tool_id));
      }
    }
  } catch (const BuildError&) {
    throw;
  } catch (const Error& ex) {
    throw BuildError("channel '" + ch.id + "': " + ex.what());
  }
  throw BuildError("channel '" + ch.id + "': unsupported source");
}

std::string fmt_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

struct Command {
  std::size_t channel = 0;
  ControlOp op = ControlOp::set_gain;
  double gain_db = 0.0;
  CombineMode mode = CombineMode::F3;
  FilterSpec spec{};
  std::optional<BiquadCascade> cascade;
  bool mute = false;
  io::ParamLogEntry entry;
};

struct ChannelState {
  std::string id;
  std::unique_ptr<Source> source;
  ChannelProcessor proc;
  int lane = 0;
  std::vector<double> x, y, z, post;
  std::vector<double> fifo;  // output buffer ahead of the sink
};

struct Recording {
  std::string path;
  std::map<std::string, std::array<std::vector<double>, 3>> raw;
  std::map<std::string, std::vector<double>> post;
  std::vector<std::vector<double>> output;
  std::vector<io::ParamLogEntry> params;
  std::int64_t samples = 0;
};

}  // namespace

struct Pipeline::Impl {
  PipelineConfig config;
  std::vector<ChannelState> channels;
  std::vector<std::string> lane_names;
  Clock::time_point built = Clock::now();

  std::mutex run_mutex;  // held for the whole of a run
  std::thread worker;
  std::atomic<bool> running{false};
  std::atomic<bool> realtime{false};
  std::atomic<bool> stop_requested{false};
  std::atomic<std::int64_t> samples{0};
  std::atomic<std::uint64_t> deadline_misses{0};
  std::atomic<std::uint64_t> underruns{0};
  std::atomic<std::uint64_t> clamp_count{0};
  SessionLog worker_log;
  std::exception_ptr worker_error;

  std::mutex control_mutex;
  std::deque<Command> mailbox;
  std::vector<io::ParamLogEntry> pending_log;  // applied while idle

  mutable std::mutex record_mutex;
  std::optional<Recording> recording;

  mutable std::mutex telemetry_mutex;
  Telemetry snapshot;
  LatencyReport latency;  // guarded by telemetry_mutex

  void update_latency() {
    LatencyReport r;
    r.buffering_s = config.align_output ? 0.0 : static_cast<double>(config.block_size) / config.rate;
    for (const auto& ch : channels) {
      const auto& cascade = ch.proc.cascade();
      if (cascade.is_identity()) continue;
      const double f0 = band_center_hz(ch.proc.strip().filter, config.rate);
      r.group_delay_s = std::max(r.group_delay_s, cascade.group_delay_samples(f0) / config.rate);
    }
    std::lock_guard lock(telemetry_mutex);
    latency = r;
  }

  std::size_t lane_count() const { return lane_names.size(); }

  void publish_telemetry(std::int64_t position) {
    Telemetry t;
    t.sample_index = position;
    t.timestamp_s = static_cast<double>(position) / config.rate;
    for (const auto& ch : channels) {
      t.channels.push_back({ch.id, ch.proc.levels(), ch.proc.strip().mode, ch.proc.strip().gain_db,
                            ch.proc.muted()});
    }
    std::lock_guard lock(telemetry_mutex);
    snapshot = std::move(t);
  }

  void reset_channels() {
    for (auto& ch : channels) {
      const bool muted = ch.proc.muted();
      ch.proc = ChannelProcessor(ch.proc.strip(), config.rate, config.meter_window_ms);
      ch.proc.set_muted(muted);
      ch.fifo.assign(config.align_output ? 0 : config.block_size, 0.0);
    }
  }

  void apply(Command& cmd, std::int64_t position, std::vector<io::ParamLogEntry>& log) {
    auto& proc = channels[cmd.channel].proc;
    switch (cmd.op) {
      case ControlOp::set_gain: proc.set_gain_db(cmd.gain_db); break;
      case ControlOp::set_mode: proc.set_mode(cmd.mode); break;
      case ControlOp::set_filter:
        proc.set_filter(cmd.spec, std::move(*cmd.cascade));
        update_latency();
        break;
      case ControlOp::mute: proc.set_muted(cmd.mute); break;
      default: break;
    }
    cmd.entry.sample_index = position;
    cmd.entry.time_s = static_cast<double>(position) / config.rate;
    log.push_back(cmd.entry);
    std::lock_guard lock(record_mutex);
    if (recording) {
      io::ParamLogEntry e = cmd.entry;
      e.sample_index -= position - recording->samples;
      e.time_s = static_cast<double>(e.sample_index) / config.rate;
      recording->params.push_back(std::move(e));
    }
  }

  void drain_mailbox(std::int64_t position, std::vector<io::ParamLogEntry>& log) {
    std::deque<Command> batch;
    {
      std::lock_guard lock(control_mutex);
      batch.swap(mailbox);
    }
    for (auto& cmd : batch) apply(cmd, position, log);
  }

  // Translates a control message into a command, or an error ack.
  std::variant<Command, Ack> prepare(const ControlMessage& msg) {
    const auto it = std::find_if(channels.begin(), channels.end(),
                                 [&](const ChannelState& c) { return c.id == msg.channel; });
    if (it == channels.end()) return Ack::failure(msg, "unknown channel '" + msg.channel + "'");
    Command cmd;
    cmd.channel = static_cast<std::size_t>(it - channels.begin());
    cmd.op = msg.op;
    auto& e = cmd.entry;
    e.client = msg.client;
    e.op = std::string(to_string(msg.op));
    e.channel = msg.channel;
    e.requested = msg.value.is_string() ? msg.value.get<std::string>() : msg.value.dump();
    try {
      switch (msg.op) {
        case ControlOp::set_gain: {
          const ClampResult c = clamp_gain_db(msg.value.get<double>());
          cmd.gain_db = msg.value.get<double>();
          e.applied = fmt_number(c.value);
          e.clamped = c.clamped;
          break;
        }
        case ControlOp::set_mode:
          cmd.mode = combine_mode_from_string(msg.value.get<std::string>());
          e.applied = std::string(to_string(cmd.mode));
          break;
        case ControlOp::set_filter: {
          FilterSpec spec = it->proc.strip().filter;
          spec.low_cut = msg.value.at("low_cut").get<double>();
          spec.high_cut = msg.value.at("high_cut").get<double>();
          if (msg.value.contains("order")) spec.order = msg.value.at("order").get<int>();
          if (msg.value.contains("bypass")) spec.bypass = msg.value.at("bypass").get<bool>();
          cmd.cascade = design_bandpass(spec, config.rate);
          cmd.spec = spec;
          e.applied = nlohmann::json{{"low_cut", spec.low_cut}, {"high_cut", spec.high_cut},
                                     {"order", spec.order}}.dump();
          break;
        }
        case ControlOp::mute:
          cmd.mute = msg.value.get<bool>();
          e.applied = cmd.mute ? "true" : "false";
          break;
        default:
          return Ack::failure(msg, "op is not a channel parameter");
      }
    } catch (const Error& ex) {
      return Ack::failure(msg, ex.what());
    } catch (const nlohmann::json::exception& ex) {
      return Ack::failure(msg, ex.what());
    }
    return cmd;
  }

  Ack start_record(const ControlMessage& msg) {
    std::string path = msg.value.is_string() ? msg.value.get<std::string>() : std::string{};
    if (path.empty() && config.record_path) path = *config.record_path;
    if (path.empty()) return Ack::failure(msg, "start_record needs a session path");
    std::lock_guard lock(record_mutex);
    if (recording) return Ack::failure(msg, "already recording to " + recording->path);
    recording.emplace();
    recording->path = path;
    recording->output.resize(lane_count());
    for (const auto& ch : channels) {
      recording->raw[ch.id];
      recording->post[ch.id];
    }
    Ack a;
    a.id = msg.id;
    a.op = msg.op;
    a.value = path;
    return a;
  }

  // Detaches the active recording and writes it out.
  std::optional<std::string> finish_recording(std::string* error) {
    std::optional<Recording> rec;
    {
      std::lock_guard lock(record_mutex);
      rec.swap(recording);
    }
    if (!rec) return std::nullopt;
    io::SessionData d;
    d.rate = config.rate;
    for (auto& [id, axes] : rec->raw) {
      d.raw.emplace(id, TriAxisSeries(std::move(axes[0]), std::move(axes[1]), std::move(axes[2]),
                                      config.rate));
    }
    d.post = std::move(rec->post);
    d.output = std::move(rec->output);
    d.output_lanes = lane_names;
    d.param_log = std::move(rec->params);
    d.end_s = static_cast<double>(rec->samples) / config.rate;
    try {
      io::write_session(rec->path, d);
    } catch (const std::exception& ex) {
      if (error) *error = ex.what();
      else warn(std::string("recording ") + rec->path + " not written: " + ex.what());
    }
    return rec->path;
  }

  Ack stop_record(const ControlMessage& msg) {
    std::string error;
    const auto path = finish_recording(&error);
    if (!path) return Ack::failure(msg, "not recording");
    if (!error.empty()) return Ack::failure(msg, error);
    Ack a;
    a.id = msg.id;
    a.op = msg.op;
    a.value = *path;
    return a;
  }

  Ack update(const ControlMessage& msg) {
    switch (msg.op) {
      case ControlOp::start_record: return start_record(msg);
      case ControlOp::stop_record: return stop_record(msg);
      case ControlOp::subscribe_levels: {
        Ack a;
        a.id = msg.id;
        a.op = msg.op;
        a.value = true;
        return a;
      }
      default: break;
    }
    auto prepared = prepare(msg);
    if (auto* ack = std::get_if<Ack>(&prepared)) return *ack;
    Command cmd = std::move(std::get<Command>(prepared));
    Ack a;
    a.id = msg.id;
    a.op = msg.op;
    a.channel = msg.channel;
    a.clamped = cmd.entry.clamped;
    switch (msg.op) {
      case ControlOp::set_gain: a.value = clamp_gain_db(cmd.gain_db).value; break;
      case ControlOp::set_mode: a.value = cmd.entry.applied; break;
      case ControlOp::set_filter: a.value = nlohmann::json::parse(cmd.entry.applied); break;
      case ControlOp::mute: a.value = cmd.mute; break;
      default: break;
    }
    if (a.clamped) ++clamp_count;

    std::unique_lock run_lock(run_mutex, std::try_to_lock);
    if (run_lock.owns_lock()) {
      // Idle: apply now, logged at the current stream position.
      std::vector<io::ParamLogEntry> log;
      apply(cmd, samples.load(), log);
      publish_telemetry(samples.load());
      std::lock_guard lock(control_mutex);
      pending_log.insert(pending_log.end(), log.begin(), log.end());
      return a;
    }
    std::lock_guard lock(control_mutex);
    if (mailbox.size() >= config.mailbox_capacity) return Ack::failure(msg, "control queue full");
    mailbox.push_back(std::move(cmd));
    return a;
  }

  void process_span(std::int64_t position, std::size_t n, SessionLog& log, bool capture) {
    std::vector<std::vector<double>> lanes(lane_count(), std::vector<double>(n, 0.0));
    for (auto& ch : channels) {
      ch.x.resize(n);
      ch.y.resize(n);
      ch.z.resize(n);
      ch.post.resize(n);
      const std::size_t missing = ch.source->read(position, ch.x, ch.y, ch.z);
      if (missing) {
        underruns += missing;
        log.underrun_samples += missing;
      }
      ch.proc.process(ch.x, ch.y, ch.z, ch.post);
      auto& lane = lanes[static_cast<std::size_t>(ch.lane)];
      if (config.align_output) {
        std::copy(ch.post.begin(), ch.post.end(), lane.begin());
      } else {
        ch.fifo.insert(ch.fifo.end(), ch.post.begin(), ch.post.end());
        std::copy_n(ch.fifo.begin(), n, lane.begin());
        ch.fifo.erase(ch.fifo.begin(), ch.fifo.begin() + static_cast<std::ptrdiff_t>(n));
      }
      if (capture) {
        auto& raw = log.raw[ch.id];
        raw.mutable_axis(0).insert(raw.mutable_axis(0).end(), ch.x.begin(), ch.x.end());
        raw.mutable_axis(1).insert(raw.mutable_axis(1).end(), ch.y.begin(), ch.y.end());
        raw.mutable_axis(2).insert(raw.mutable_axis(2).end(), ch.z.begin(), ch.z.end());
        auto& post = log.post[ch.id];
        post.insert(post.end(), ch.post.begin(), ch.post.end());
      }
    }
    if (capture) {
      for (std::size_t l = 0; l < lanes.size(); ++l) {
        log.output[l].insert(log.output[l].end(), lanes[l].begin(), lanes[l].end());
      }
    }
    {
      std::lock_guard lock(record_mutex);
      if (recording) {
        for (const auto& ch : channels) {
          auto& raw = recording->raw[ch.id];
          raw[0].insert(raw[0].end(), ch.x.begin(), ch.x.end());
          raw[1].insert(raw[1].end(), ch.y.begin(), ch.y.end());
          raw[2].insert(raw[2].end(), ch.z.begin(), ch.z.end());
          auto& post = recording->post[ch.id];
          post.insert(post.end(), ch.post.begin(), ch.post.end());
        }
        for (std::size_t l = 0; l < lanes.size(); ++l) {
          recording->output[l].insert(recording->output[l].end(), lanes[l].begin(), lanes[l].end());
        }
        recording->samples += static_cast<std::int64_t>(n);
      }
    }

    // Meter frames at 10 Hz of stream time.
    const auto emit = std::max<std::int64_t>(1, std::llround(config.rate / 10.0));
    const std::int64_t end = position + static_cast<std::int64_t>(n);
    if (end / emit != position / emit) {
      LevelFrame f;
      f.sample_index = end;
      for (const auto& ch : channels) f.channels[ch.id] = ch.proc.levels();
      log.levels.push_back(std::move(f));
      publish_telemetry(end);
    }
    samples = end;
  }

  SessionLog run(const RunOptions& options) {
    std::unique_lock run_lock(run_mutex, std::try_to_lock);
    if (!run_lock.owns_lock()) throw ContractError("pipeline is already running");

    std::int64_t limit = std::numeric_limits<std::int64_t>::max();
    if (options.max_samples) {
      limit = *options.max_samples;
    } else {
      bool unbounded = false;
      std::int64_t longest = 0;
      for (const auto& ch : channels) {
        const auto len = ch.source->length();
        unbounded |= !len.has_value();
        longest = std::max(longest, len.value_or(0));
      }
      if (unbounded && !options.realtime) {
        throw ContractError("offline run over a network source needs max_samples");
      }
      if (!unbounded) limit = longest;
    }

    SessionLog log;
    log.rate = config.rate;
    log.output_lanes = lane_names;
    if (options.capture) {
      log.output.resize(lane_count());
      for (const auto& ch : channels) {
        log.raw.emplace(ch.id, TriAxisSeries::zeros(0, config.rate));
        log.post[ch.id];
      }
    }
    {
      std::lock_guard lock(control_mutex);
      log.params.swap(pending_log);
    }
    for (auto& e : log.params) {
      e.sample_index = 0;
      e.time_s = 0.0;
    }

    reset_channels();
    samples = 0;
    deadline_misses = 0;
    underruns = 0;
    stop_requested = false;
    realtime = options.realtime;
    running = true;
    publish_telemetry(0);

    bool own_recording = false;
    if (config.record_path) {
      ControlMessage m;
      m.op = ControlOp::start_record;
      m.value = *config.record_path;
      own_recording = start_record(m).ok;
    }

    const auto period = std::chrono::duration<double>(static_cast<double>(config.block_size) / config.rate);
    std::optional<RealtimePriority> priority;
    if (options.realtime) priority.emplace();
    const auto t0 = Clock::now();
    std::size_t next_script = 0;
    std::int64_t pos = 0;
    try {
      while (!stop_requested && pos < limit) {
        const auto n = static_cast<std::size_t>(
            std::min<std::int64_t>(static_cast<std::int64_t>(config.block_size), limit - pos));

        Clock::time_point wake{};
        if (options.realtime) {
          // The block's input is complete once its last sample has been captured.
          wake = t0 + std::chrono::duration_cast<Clock::duration>(
                          std::chrono::duration<double>(static_cast<double>(pos + static_cast<std::int64_t>(n)) /
                                                        config.rate));
          std::this_thread::sleep_until(wake);
        }
        const auto begin = Clock::now();
        drain_mailbox(pos, log.params);

        // Scheduled controls split the block so they land on their sample.
        std::size_t done = 0;
        while (done < n) {
          const std::int64_t here = pos + static_cast<std::int64_t>(done);
          while (next_script < options.script.size() && options.script[next_script].sample <= here) {
            const auto& tc = options.script[next_script++];
            ControlMessage msg = tc.message;
            if (msg.op == ControlOp::start_record) {
              if (!start_record(msg).ok) warn("scripted start_record rejected");
              continue;
            }
            if (msg.op == ControlOp::stop_record) {
              finish_recording(nullptr);
              continue;
            }
            auto prepared = prepare(msg);
            if (auto* cmd = std::get_if<Command>(&prepared)) {
              if (cmd->entry.clamped) ++clamp_count;
              apply(*cmd, here, log.params);
            } else if (auto* ack = std::get_if<Ack>(&prepared)) {
              warn("scripted control at sample " + std::to_string(tc.sample) + " rejected: " + ack->error);
            }
          }
          std::size_t span = n - done;
          if (next_script < options.script.size()) {
            const std::int64_t until = options.script[next_script].sample - here;
            span = static_cast<std::size_t>(std::min<std::int64_t>(static_cast<std::int64_t>(span), until));
          }
          process_span(here, span, log, options.capture);
          done += span;
        }
        const auto finish = Clock::now();
        log.worst_block_s = std::max(log.worst_block_s, std::chrono::duration<double>(finish - begin).count());
        if (options.realtime && finish > wake + std::chrono::duration_cast<Clock::duration>(period)) {
          ++deadline_misses;
        }
        ++log.blocks;
        pos += static_cast<std::int64_t>(n);
      }
    } catch (...) {
      running = false;
      if (own_recording) finish_recording(nullptr);
      throw;
    }

    log.samples = pos;
    log.deadline_misses = deadline_misses;
    log.clamp_count = clamp_count;
    if (config.sink_path && options.capture) io::write_wav(*config.sink_path, log.output, config.rate);
    if (own_recording) finish_recording(nullptr);
    running = false;
    return log;
  }
};

Pipeline::Pipeline(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Pipeline::Pipeline(Pipeline&&) noexcept = default;
Pipeline& Pipeline::operator=(Pipeline&&) noexcept = default;

Pipeline::~Pipeline() {
  if (impl_ && impl_->worker.joinable()) {
    impl_->stop_requested = true;
    impl_->worker.join();
  }
}

Pipeline Pipeline::build(const PipelineConfig& config) {
  validate(config);
  auto impl = std::make_unique<Impl>();
  impl->config = config;
  SourceCache cache;
  int max_lane = 0;
  for (const auto& cc : config.channels) {
    ChannelState ch;
    ch.id = cc.id;
    ch.lane = cc.sink_lane;
    ch.source = open_source(cc, config.rate, cache);
    ch.proc = ChannelProcessor(cc.strip, config.rate, config.meter_window_ms);
    max_lane = std::max(max_lane, cc.sink_lane);
    impl->channels.push_back(std::move(ch));
  }
  impl->lane_names.assign(static_cast<std::size_t>(max_lane) + 1, std::string{});
  for (const auto& ch : impl->channels) impl->lane_names[static_cast<std::size_t>(ch.lane)] = ch.id;
  for (std::size_t l = 0; l < impl->lane_names.size(); ++l) {
    if (impl->lane_names[l].empty()) impl->lane_names[l] = "lane" + std::to_string(l);
  }
  impl->reset_channels();
  impl->update_latency();
  impl->publish_telemetry(0);
  return Pipeline(std::move(impl));
}

const PipelineConfig& Pipeline::config() const { return impl_->config; }

LatencyReport Pipeline::latency() const {
  std::lock_guard lock(impl_->telemetry_mutex);
  return impl_->latency;
}

SessionLog Pipeline::run(const RunOptions& options) { return impl_->run(options); }

void Pipeline::start(RunOptions options) {
  if (impl_->running || impl_->worker.joinable()) throw ContractError("pipeline is already running");
  options.realtime = true;
  impl_->worker_error = nullptr;
  impl_->running = true;
  impl_->worker = std::thread([impl = impl_.get(), options = std::move(options)] {
    try {
      impl->worker_log = impl->run(options);
    } catch (...) {
      impl->worker_error = std::current_exception();
      impl->running = false;
    }
  });
}

SessionLog Pipeline::stop() {
  if (!impl_->worker.joinable()) throw ContractError("pipeline was not started");
  impl_->stop_requested = true;
  impl_->worker.join();
  if (impl_->worker_error) std::rethrow_exception(std::exchange(impl_->worker_error, nullptr));
  return std::move(impl_->worker_log);
}

bool Pipeline::running() const { return impl_->running; }

Ack Pipeline::update_param(const ControlMessage& message) { return impl_->update(message); }

Telemetry Pipeline::telemetry() const {
  std::lock_guard lock(impl_->telemetry_mutex);
  return impl_->snapshot;
}

PipelineStatus Pipeline::status() const {
  PipelineStatus s;
  s.running = impl_->running;
  s.realtime = impl_->realtime;
  s.samples = impl_->samples;
  s.deadline_misses = impl_->deadline_misses;
  s.underrun_samples = impl_->underruns;
  s.clamp_count = impl_->clamp_count;
  {
    std::lock_guard lock(impl_->record_mutex);
    s.recording = impl_->recording.has_value();
    if (impl_->recording) s.recording_path = impl_->recording->path;
  }
  s.uptime_s = std::chrono::duration<double>(Clock::now() - impl_->built).count();
  s.latency = latency();
  return s;
}

}  // namespace vibromix
