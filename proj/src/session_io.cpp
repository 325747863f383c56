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

#include "vibromix/session_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vibromix/diagnostics.hpp"
#include "vibromix/error.hpp"

namespace vibromix::io {
namespace fs = std::filesystem;
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string origin)
      : bytes_(bytes), origin_(std::move(origin)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void seek(std::size_t pos) { pos_ = pos; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw ParseError(origin_ + ": truncated " + what + " (need " + std::to_string(n) +
                           " bytes, " + std::to_string(remaining()) + " left)",
                       bytes_.size());
    }
  }

  std::string tag(const char* what) {
    need(4, what);
    std::string t(reinterpret_cast<const char*>(&bytes_[pos_]), 4);
    pos_ += 4;
    return t;
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  const std::uint8_t* data() const { return bytes_.data() + pos_; }
  const std::string& origin() const { return origin_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(trim(field));
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(where + ": '" + text + "' is not a number");
  }
}

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// WAV

std::vector<std::uint8_t> encode_wav(const std::vector<std::vector<double>>& channels,
                                     double rate) {
  if (channels.empty()) throw ContractError("WAV needs at least one channel");
  const std::size_t frames = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != frames) throw ContractError("WAV channels must have equal length");
  }
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const auto sample_rate = static_cast<std::uint32_t>(std::llround(rate));
  if (static_cast<double>(sample_rate) != rate) {
    throw ContractError("WAV sample rate must be an integer number of Hz");
  }
  const std::uint64_t data_bytes = static_cast<std::uint64_t>(frames) * n_ch * 4;
  if (data_bytes > 0xFFFFFF00ULL) throw ContractError("recording too large for a RIFF file");

  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(data_bytes) + 58);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(4 + (8 + 18) + (8 + 4) + (8 + data_bytes)));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 18);
  put_u16(out, kFormatFloat);
  put_u16(out, n_ch);
  put_u32(out, sample_rate);
  put_u32(out, sample_rate * n_ch * 4);
  put_u16(out, static_cast<std::uint16_t>(n_ch * 4));
  put_u16(out, 32);
  put_u16(out, 0);  // cbSize
  put_tag(out, "fact");
  put_u32(out, 4);
  put_u32(out, static_cast<std::uint32_t>(frames));
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_bytes));
  for (std::size_t f = 0; f < frames; ++f) {
    for (const auto& ch : channels) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(ch[f])));
    }
  }
  return out;
}

WavData parse_wav(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  ByteReader r(bytes, origin);
  if (r.tag("RIFF header") != "RIFF") throw ParseError(origin + ": missing RIFF tag", 0);
  const std::uint32_t riff_size = r.u32("RIFF header");
  if (r.tag("RIFF header") != "WAVE") throw ParseError(origin + ": RIFF form is not WAVE", 8);
  const std::size_t riff_end = std::min<std::size_t>(bytes.size(), 8ULL + riff_size);

  std::uint16_t format = 0, n_ch = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (r.offset() + 8 <= riff_end) {
    const std::size_t chunk_start = r.offset();
    const std::string id = r.tag("chunk header");
    const std::uint32_t size = r.u32("chunk header");
    const std::size_t body = r.offset();
    if (id == "fmt ") {
      if (size < 16) throw ParseError(origin + ": fmt chunk shorter than 16 bytes", chunk_start);
      r.need(size, "fmt chunk");
      format = r.u16("fmt");
      n_ch = r.u16("fmt");
      rate = r.u32("fmt");
      r.u32("fmt");  // byte rate
      r.u16("fmt");  // block align
      bits = r.u16("fmt");
      if (format == kFormatExtensible) {
        if (size < 40) throw ParseError(origin + ": extensible fmt chunk too short", chunk_start);
        r.u16("fmt");  // cbSize
        r.u16("fmt");  // valid bits
        r.u32("fmt");  // channel mask
        format = r.u16("fmt");  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError(origin + ": data chunk before fmt chunk", chunk_start);
      if (n_ch == 0) throw ParseError(origin + ": zero channels", chunk_start);
      if (rate == 0) throw ParseError(origin + ": zero sample rate", chunk_start);
      const bool is_float = format == kFormatFloat && (bits == 32 || bits == 64);
      const bool is_pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
      if (!is_float && !is_pcm) {
        throw ParseError(origin + ": unsupported sample format " + std::to_string(format) + "/" +
                             std::to_string(bits) + " bits",
                         chunk_start);
      }
      const std::size_t width = bits / 8;
      const std::size_t frame_bytes = width * n_ch;
      if (size % frame_bytes != 0) {
        throw ParseError(origin + ": data chunk size is not a whole number of frames", chunk_start);
      }
      if (r.remaining() < size) {
        throw ParseError(origin + ": truncated data chunk (declares " + std::to_string(size) +
                             " bytes, " + std::to_string(r.remaining()) + " present)",
                         bytes.size());
      }
      const std::size_t frames = size / frame_bytes;
      WavData wav;
      wav.rate = rate;
      wav.channels.assign(n_ch, std::vector<double>(frames));
      const std::uint8_t* p = r.data();
      for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t c = 0; c < n_ch; ++c, p += width) {
          double v = 0.0;
          if (is_float && bits == 32) {
            std::uint32_t u;
            std::memcpy(&u, p, 4);
            v = std::bit_cast<float>(u);
          } else if (is_float) {
            std::uint64_t u;
            std::memcpy(&u, p, 8);
            v = std::bit_cast<double>(u);
          } else if (bits == 16) {
            const auto s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
            v = s / 32768.0;
          } else if (bits == 24) {
            std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
            if (s & 0x800000) s |= ~0xFFFFFF;
            v = s / 8388608.0;
          } else {
            std::uint32_t u;
            std::memcpy(&u, p, 4);
            v = static_cast<std::int32_t>(u) / 2147483648.0;
          }
          wav.channels[c][f] = v;
        }
      }
      return wav;
    } else {
      r.need(size, "chunk body");
    }
    r.seek(body + size + (size & 1));
    if (r.offset() > bytes.size()) {
      throw ParseError(origin + ": chunk '" + id + "' runs past end of file", bytes.size());
    }
  }
  throw ParseError(origin + ": no data chunk found", r.offset());
}

void write_wav(const std::string& path, const std::vector<std::vector<double>>& channels,
               double rate) {
  write_bytes(path, encode_wav(channels, rate));
}

void write_wav(const std::string& path, const TriAxisSeries& series) {
  write_wav(path, {series.x(), series.y(), series.z()}, series.rate());
}

void write_wav(const std::string& path, const SampleBlock& block) {
  write_wav(path, {block.samples}, block.rate);
}

WavData read_wav(const std::string& path) { return parse_wav(slurp(path), path); }

TriAxisSeries read_wav_tri(const std::string& path, SignalKind kind) {
  WavData wav = read_wav(path);
  if (wav.channels.size() != 3) {
    throw SchemaError("'" + path + "' has " + std::to_string(wav.channels.size()) +
                      " channels; a tri-axis recording needs 3");
  }
  return TriAxisSeries(std::move(wav.channels[0]), std::move(wav.channels[1]),
                       std::move(wav.channels[2]), wav.rate, kind);
}

SampleBlock read_wav_mono(const std::string& path) {
  WavData wav = read_wav(path);
  if (wav.channels.size() != 1) {
    throw SchemaError("'" + path + "' has " + std::to_string(wav.channels.size()) +
                      " channels; expected mono");
  }
  return SampleBlock(std::move(wav.channels[0]), wav.rate);
}

// ---------------------------------------------------------------------------
// CSV

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("missing CSV column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

const std::string& CsvTable::at(std::size_t row, const std::string& name) const {
  return rows.at(row).at(column(name));
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (first) {
      for (auto& f : fields) {
        std::transform(f.begin(), f.end(), f.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      }
      table.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw SchemaError(origin + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (first) throw SchemaError(origin + ": empty CSV (no header row)");
  return table;
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

AxesCsv parse_axes_csv(const CsvTable& table, SignalKind kind, const std::string& origin) {
  std::string time_col;
  for (const char* c : {"timestamp", "time", "time_s", "t"}) {
    if (table.has_column(c)) {
      time_col = c;
      break;
    }
  }
  if (time_col.empty()) throw SchemaError(origin + ": no timestamp column");
  const bool force = kind == SignalKind::force;
  std::array<std::string, 3> names = force ? std::array<std::string, 3>{"fx", "fy", "fz"}
                                           : std::array<std::string, 3>{"x", "y", "z"};
  if (!force && !table.has_column("x") && table.has_column("ax")) names = {"ax", "ay", "az"};
  for (const auto& n : names) {
    if (!table.has_column(n)) throw SchemaError(origin + ": missing column '" + n + "'");
  }
  const std::size_t n = table.size();
  if (n < 2) throw SchemaError(origin + ": need at least two samples");

  std::vector<double> t(n);
  std::array<std::vector<double>, 3> v{std::vector<double>(n), std::vector<double>(n),
                                       std::vector<double>(n)};
  const std::size_t tc = table.column(time_col);
  std::array<std::size_t, 3> cols{table.column(names[0]), table.column(names[1]),
                                  table.column(names[2])};
  for (std::size_t i = 0; i < n; ++i) {
    const std::string where = origin + " row " + std::to_string(i + 1);
    t[i] = parse_number(table.rows[i][tc], where);
    for (std::size_t a = 0; a < 3; ++a) v[a][i] = parse_number(table.rows[i][cols[a]], where);
    if (i > 0 && !(t[i] > t[i - 1])) throw SchemaError(where + ": timestamps must increase");
  }

  std::vector<double> steps(n - 1);
  for (std::size_t i = 1; i < n; ++i) steps[i - 1] = t[i] - t[i - 1];
  std::vector<double> sorted = steps;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                   sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double rate = std::round(1.0 / median);
  const double dt = 1.0 / rate;
  bool uniform = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs((t[i] - t[0]) - static_cast<double>(i) * dt) > 1e-3 * dt) {
      uniform = false;
      break;
    }
  }

  AxesCsv out;
  if (uniform) {
    out.series = TriAxisSeries(std::move(v[0]), std::move(v[1]), std::move(v[2]), rate, kind);
    return out;
  }
  const auto m = static_cast<std::size_t>(std::floor((t.back() - t.front()) * rate + 1e-9)) + 1;
  std::array<std::vector<double>, 3> u{std::vector<double>(m), std::vector<double>(m),
                                       std::vector<double>(m)};
  std::size_t j = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double tk = t.front() + static_cast<double>(k) * dt;
    while (j + 2 < n && t[j + 1] < tk) ++j;
    const double w = std::clamp((tk - t[j]) / (t[j + 1] - t[j]), 0.0, 1.0);
    for (std::size_t a = 0; a < 3; ++a) u[a][k] = v[a][j] + w * (v[a][j + 1] - v[a][j]);
  }
  out.series = TriAxisSeries(std::move(u[0]), std::move(u[1]), std::move(u[2]), rate, kind);
  out.resampled = true;
  return out;
}

AxesCsv read_axes_csv(const std::string& path, SignalKind kind) {
  return parse_axes_csv(read_csv_table(path), kind, path);
}

TriAxisSeries read_force_csv(const std::string& path) {
  AxesCsv csv = read_axes_csv(path, SignalKind::force);
  if (csv.resampled) {
    warn("'" + path + "': non-uniform timestamps resampled to " +
         std::to_string(csv.series.rate()) + " Hz by linear interpolation");
  }
  return std::move(csv.series);
}

void write_force_csv(const std::string& path, const TriAxisSeries& force) {
  std::ostringstream os;
  os.precision(9);
  os << "timestamp,fx,fy,fz\n";
  for (std::size_t i = 0; i < force.size(); ++i) {
    os << fmt17(static_cast<double>(i) / force.rate()) << ',' << force.x()[i] << ','
       << force.y()[i] << ',' << force.z()[i] << '\n';
  }
  write_text(path, os.str());
}

TriAxisSeries read_recording(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".wav" || ext == ".WAV") return read_wav_tri(path);
  if (ext == ".csv" || ext == ".CSV") {
    AxesCsv csv = read_axes_csv(path, SignalKind::acceleration);
    if (csv.resampled) warn("'" + path + "': non-uniform timestamps resampled");
    return std::move(csv.series);
  }
  throw SchemaError("'" + path + "': unsupported recording type (expected .wav or .csv)");
}

// ---------------------------------------------------------------------------
// Parameter log

std::string param_log_csv(const std::vector<ParamLogEntry>& entries) {
  std::ostringstream os;
  os << "sample_index,time_s,client,op,channel,requested,applied,clamped\n";
  for (const auto& e : entries) {
    os << e.sample_index << ',' << fmt17(e.time_s) << ',' << e.client << ',' << e.op << ','
       << e.channel << ',' << e.requested << ',' << e.applied << ',' << (e.clamped ? 1 : 0)
       << '\n';
  }
  return os.str();
}

void write_param_log(const std::string& path, const std::vector<ParamLogEntry>& entries) {
  write_text(path, param_log_csv(entries));
}

std::vector<ParamLogEntry> read_param_log(const std::string& path) {
  const CsvTable t = read_csv_table(path);
  std::vector<ParamLogEntry> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ParamLogEntry e;
    e.sample_index = std::stoll(t.at(i, "sample_index"));
    e.time_s = parse_number(t.at(i, "time_s"), path);
    e.client = t.at(i, "client");
    e.op = t.at(i, "op");
    e.channel = t.at(i, "channel");
    e.requested = t.at(i, "requested");
    e.applied = t.at(i, "applied");
    e.clamped = t.at(i, "clamped") == "1";
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

nlohmann::json to_json(const SessionManifest& m) {
  nlohmann::json j;
  j["version"] = m.version;
  j["rate"] = m.rate;
  j["samples"] = m.samples;
  auto tools = nlohmann::json::array();
  for (const auto& t : m.tools) {
    nlohmann::json jt{{"id", t.id}, {"raw", t.raw}};
    if (!t.post.empty()) jt["post"] = t.post;
    tools.push_back(jt);
  }
  j["tools"] = tools;
  if (!m.output.empty()) {
    j["output"] = {{"path", m.output}, {"lanes", m.output_lanes}};
  }
  if (!m.force.empty()) j["force"] = {{"path", m.force}, {"rate", m.force_rate}};
  if (!m.param_log.empty()) j["param_log"] = m.param_log;
  j["markers"] = {{"start_s", m.start_s}};
  if (m.end_s) j["markers"]["end_s"] = *m.end_s;
  if (!m.extra.empty()) j["extra"] = m.extra;
  return j;
}

SessionManifest manifest_from_json(const nlohmann::json& j) {
  SessionManifest m;
  try {
    m.version = j.at("version").get<int>();
    if (m.version != kManifestVersion) {
      throw SchemaError("unsupported manifest version " + std::to_string(m.version));
    }
    m.rate = j.at("rate").get<double>();
    m.samples = j.value("samples", std::int64_t{0});
    for (const auto& jt : j.at("tools")) {
      m.tools.push_back({jt.at("id").get<std::string>(), jt.at("raw").get<std::string>(),
                         jt.value("post", std::string())});
    }
    if (j.contains("output")) {
      m.output = j.at("output").at("path").get<std::string>();
      m.output_lanes = j.at("output").at("lanes").get<std::vector<std::string>>();
    }
    if (j.contains("force")) {
      m.force = j.at("force").at("path").get<std::string>();
      m.force_rate = j.at("force").at("rate").get<double>();
    }
    m.param_log = j.value("param_log", std::string());
    if (j.contains("markers")) {
      m.start_s = j.at("markers").value("start_s", 0.0);
      if (j.at("markers").contains("end_s")) m.end_s = j.at("markers").at("end_s").get<double>();
    }
    if (j.contains("extra")) m.extra = j.at("extra");
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("session manifest: ") + ex.what());
  }
  return m;
}

nlohmann::json manifest_schema() {
  return nlohmann::json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "vibromix session manifest",
  "type": "object",
  "required": ["version", "rate", "tools"],
  "properties": {
    "version": {"const": 1},
    "rate": {"type": "number", "exclusiveMinimum": 0},
    "samples": {"type": "integer", "minimum": 0},
    "tools": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["id", "raw"],
        "properties": {
          "id": {"type": "string"},
          "raw": {"type": "string", "description": "3-channel float WAV, channels x,y,z"},
          "post": {"type": "string", "description": "mono float WAV, post-chain drive"}
        }
      }
    },
    "output": {
      "type": "object",
      "required": ["path", "lanes"],
      "properties": {
        "path": {"type": "string"},
        "lanes": {"type": "array", "items": {"type": "string"}}
      }
    },
    "force": {
      "type": "object",
      "required": ["path", "rate"],
      "properties": {"path": {"type": "string"}, "rate": {"type": "number"}}
    },
    "param_log": {"type": "string"},
    "markers": {
      "type": "object",
      "properties": {"start_s": {"type": "number"}, "end_s": {"type": "number"}}
    },
    "extra": {"type": "object"}
  }
})");
}

SessionManifest write_session(const std::string& dir, const SessionData& session) {
  fs::create_directories(dir);
  const fs::path base(dir);
  SessionManifest m;
  m.rate = session.rate;
  m.start_s = session.start_s;
  m.end_s = session.end_s;
  for (const auto& [tool, raw] : session.raw) {
    if (raw.rate() != session.rate) throw ContractError("raw stream rate differs from session rate");
    ToolFiles files{tool, tool + "_raw.wav", ""};
    write_wav((base / files.raw).string(), raw);
    m.samples = std::max<std::int64_t>(m.samples, static_cast<std::int64_t>(raw.size()));
    if (auto it = session.post.find(tool); it != session.post.end()) {
      files.post = tool + "_post.wav";
      write_wav((base / files.post).string(), {it->second}, session.rate);
    }
    m.tools.push_back(files);
  }
  for (const auto& [tool, post] : session.post) {
    if (session.raw.contains(tool)) continue;
    ToolFiles files{tool, "", tool + "_post.wav"};
    write_wav((base / files.post).string(), {post}, session.rate);
    m.tools.push_back(files);
  }
  if (!session.output.empty()) {
    m.output = "output.wav";
    m.output_lanes = session.output_lanes;
    write_wav((base / m.output).string(), session.output, session.rate);
  }
  if (session.force) {
    m.force = "force.csv";
    m.force_rate = session.force->rate();
    write_force_csv((base / m.force).string(), *session.force);
  }
  m.param_log = "params.csv";
  write_param_log((base / m.param_log).string(), session.param_log);
  write_text((base / "manifest.json").string(), to_json(m).dump(2) + "\n");
  return m;
}

namespace {

SessionManifest read_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) throw SchemaError("no manifest.json in '" + dir + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& ex) {
    throw SchemaError(path.string() + ": " + ex.what());
  }
  return manifest_from_json(j);
}

}  // namespace

std::vector<std::string> validate_session(const std::string& dir) {
  std::vector<std::string> problems;
  SessionManifest m;
  try {
    m = read_manifest(dir);
  } catch (const Error& e) {
    return {e.what()};
  }
  const fs::path base(dir);
  auto check_wav = [&](const std::string& rel, std::optional<std::size_t> channels) {
    const fs::path p = base / rel;
    if (!fs::exists(p)) {
      problems.push_back("missing file '" + rel + "'");
      return;
    }
    try {
      const WavData w = read_wav(p.string());
      if (w.rate != m.rate) {
        problems.push_back("'" + rel + "' rate " + std::to_string(w.rate) +
                           " Hz differs from manifest rate " + std::to_string(m.rate) + " Hz");
      }
      if (channels && w.channels.size() != *channels) {
        problems.push_back("'" + rel + "' has " + std::to_string(w.channels.size()) +
                           " channels, expected " + std::to_string(*channels));
      }
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  };
  for (const auto& t : m.tools) {
    if (!t.raw.empty()) check_wav(t.raw, 3);
    if (!t.post.empty()) check_wav(t.post, 1);
  }
  if (!m.output.empty()) check_wav(m.output, m.output_lanes.size());
  if (!m.force.empty()) {
    const fs::path p = base / m.force;
    if (!fs::exists(p)) {
      problems.push_back("missing file '" + m.force + "'");
    } else {
      try {
        const AxesCsv f = read_axes_csv(p.string(), SignalKind::force);
        if (f.series.rate() != m.force_rate) {
          problems.push_back("'" + m.force + "' rate " + std::to_string(f.series.rate()) +
                             " Hz differs from manifest force rate " +
                             std::to_string(m.force_rate) + " Hz");
        }
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
    }
  }
  if (!m.param_log.empty() && !fs::exists(base / m.param_log)) {
    problems.push_back("missing file '" + m.param_log + "'");
  }
  return problems;
}

SessionData load_session(const std::string& dir) {
  const auto problems = validate_session(dir);
  if (!problems.empty()) {
    std::string msg = "invalid session '" + dir + "':";
    for (const auto& p : problems) msg += "\n  " + p;
    throw SchemaError(msg);
  }
  const SessionManifest m = read_manifest(dir);
  const fs::path base(dir);
  SessionData s;
  s.rate = m.rate;
  s.start_s = m.start_s;
  s.end_s = m.end_s;
  for (const auto& t : m.tools) {
    if (!t.raw.empty()) s.raw.emplace(t.id, read_wav_tri((base / t.raw).string()));
    if (!t.post.empty()) s.post.emplace(t.id, read_wav_mono((base / t.post).string()).samples);
  }
  if (!m.output.empty()) {
    s.output = read_wav((base / m.output).string()).channels;
    s.output_lanes = m.output_lanes;
  }
  if (!m.force.empty()) s.force = read_force_csv((base / m.force).string());
  if (!m.param_log.empty()) s.param_log = read_param_log((base / m.param_log).string());
  return s;
}

}  // namespace vibromix::io
