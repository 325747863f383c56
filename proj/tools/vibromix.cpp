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

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "vibromix/control_service.hpp"
#include "vibromix/error.hpp"
#include "vibromix/fidelity.hpp"
#include "vibromix/pipeline.hpp"
#include "vibromix/placement.hpp"
#include "vibromix/session_io.hpp"
#include "vibromix/synth.hpp"
#include "vibromix/trial_metrics.hpp"

namespace fs = std::filesystem;
using namespace vibromix;
using namespace vibromix::fidelity;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

struct PipelineFlags {
  std::string config;
  std::string in;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> rate;
  std::optional<std::size_t> block_size;
  bool align = false;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Pipeline config JSON")->check(CLI::ExistingFile);
    app->add_option("--in", in, "Session directory feeding every channel")->check(CLI::ExistingDirectory);
    app->add_option("--scenario,--script", scenario, "Synthetic scenario JSON feeding every channel")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Scenario seed (overrides the file)");
    app->add_option("--rate", rate, "Sample rate in Hz (overrides the config)");
    app->add_option("--block-size", block_size, "Block size in samples (overrides the config)");
    app->add_flag("--align-output", align, "Drop the one-block output buffer");
  }

  // Config file first, then flags on top.
  PipelineConfig resolve() const {
    PipelineConfig c;
    if (!config.empty()) {
      c = load_pipeline_config(config);
    } else {
      synth::ScenarioScript script = scenario.empty() ? synth::demo_script(seed.value_or(1))
                                                      : synth::load_script(scenario);
      c = default_pipeline_config(script);
    }
    if (rate) c.rate = *rate;
    if (block_size) c.block_size = *block_size;
    if (align) c.align_output = true;
    for (auto& ch : c.channels) {
      if (!in.empty()) {
        ch.source = {};
        ch.source.kind = SourceKind::file;
        ch.source.path = in;
        ch.source.tool = ch.id;
      } else if (!scenario.empty() && !config.empty()) {
        ch.source.kind = SourceKind::synth;
        ch.source.script.reset();
        ch.source.path = scenario;
      }
      if (ch.source.kind == SourceKind::synth) {
        if (!ch.source.script && !ch.source.path.empty()) ch.source.script = synth::load_script(ch.source.path);
        if (ch.source.script) {
          if (seed) ch.source.script->seed = *seed;
          if (rate) ch.source.script->rate = *rate;
        }
      }
    }
    return c;
  }
};

int cmd_run(const PipelineFlags& pf, const std::string& out, const std::string& controls,
            std::optional<double> duration, bool realtime) {
  PipelineConfig config = pf.resolve();
  if (!out.empty()) config.record_path = out;
  Pipeline pipeline = Pipeline::build(config);
  RunOptions options;
  options.realtime = realtime;
  options.capture = false;
  if (duration) options.max_samples = static_cast<std::int64_t>(std::llround(*duration * config.rate));
  if (!controls.empty()) options.script = load_control_script(controls, config.rate);
  const SessionLog log = pipeline.run(options);
  nlohmann::json summary{{"samples", log.samples},
                         {"duration_s", static_cast<double>(log.samples) / config.rate},
                         {"blocks", log.blocks},
                         {"deadline_misses", log.deadline_misses},
                         {"underrun_samples", log.underrun_samples},
                         {"clamp_count", log.clamp_count},
                         {"param_changes", log.params.size()},
                         {"latency", to_json(pipeline.latency())}};
  if (!out.empty()) {
    summary["session"] = out;
    write_file(fs::path(out) / "config.json", to_json(config).dump(2) + "\n");
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_serve(const PipelineFlags& pf, std::optional<int> port, const std::string& host,
              std::optional<double> duration, const std::string& out) {
  PipelineConfig config = pf.resolve();
  if (!out.empty()) config.record_path = out;
  Pipeline pipeline = Pipeline::build(config);
  ServiceOptions so;
  so.host = host;
  so.port = resolve_control_port(port);
  ControlService service(pipeline, so);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  RunOptions options;
  options.capture = false;
  pipeline.start(options);
  std::cout << "vibromix: control on ws://" << host << ":" << service.port() << "/control, status on http://"
            << host << ":" << service.port() << "/status" << std::endl;
  const auto t0 = std::chrono::steady_clock::now();
  while (!g_interrupted && pipeline.running()) {
    if (duration && std::chrono::steady_clock::now() - t0 >= std::chrono::duration<double>(*duration)) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  service.stop();
  const SessionLog log = pipeline.stop();
  std::cout << nlohmann::json{{"samples", log.samples},
                              {"deadline_misses", log.deadline_misses},
                              {"underrun_samples", log.underrun_samples},
                              {"clamp_count", log.clamp_count},
                              {"param_changes", log.params.size()}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_synth(const std::string& script_path, const std::string& out, std::optional<std::uint64_t> seed,
              std::optional<double> rate) {
  synth::ScenarioScript script = script_path.empty() ? synth::demo_script(seed.value_or(1))
                                                     : synth::load_script(script_path);
  if (seed) script.seed = *seed;
  if (rate) script.rate = *rate;
  const synth::RenderedScenario rendered = synth::render_scenario(script);
  io::SessionData d;
  d.rate = script.rate;
  d.raw = rendered.tools;
  d.end_s = script.duration;
  io::write_session(out, d);
  write_file(fs::path(out) / "ground_truth.csv", synth::ground_truth_csv(rendered.events));
  write_file(fs::path(out) / "scenario.json", synth::to_json(script).dump(2) + "\n");
  std::cout << "wrote " << rendered.tools.size() << " tools, " << rendered.events.size() << " events to "
            << out << "\n";
  return 0;
}

int cmd_placement(const std::string& manifest, const std::string& out, double margin,
                  std::optional<double> ceiling) {
  const placement::Dataset ds = placement::load_dataset(manifest);
  placement::SelectionRule rule;
  rule.rotation_margin_db = margin;
  rule.rotation_ceiling_db = ceiling;
  const placement::SnrReport snr = placement::placement_report(ds.recordings, rule);
  std::optional<placement::EnergyRatioReport> energy;
  if (!ds.actuator_pairs.empty()) energy = placement::actuator_report(ds.actuator_pairs);
  std::cout << placement::report_text(snr, energy ? &*energy : nullptr);
  if (!out.empty()) {
    write_file(fs::path(out) / "snr_report.csv", placement::snr_report_csv(snr));
    if (energy) write_file(fs::path(out) / "energy_ratio_report.csv", placement::energy_ratio_report_csv(*energy));
  }
  return 0;
}

// A session directory or a WAV file, reduced to one stream for one tool.
SampleBlock load_stream(const std::string& path, const std::string& tool, const std::string& stream) {
  if (!fs::is_directory(path)) {
    const io::WavData w = io::read_wav(path);
    if (w.channels.size() == 3) {
      return axis_combine(TriAxisSeries(w.channels[0], w.channels[1], w.channels[2], w.rate), CombineMode::F3);
    }
    if (w.channels.size() != 1) throw ContractError(path + ": expected a mono or tri-axis WAV");
    return SampleBlock(w.channels[0], w.rate);
  }
  const io::SessionData s = io::load_session(path);
  if (stream == "raw") {
    const auto it = s.raw.find(tool);
    if (it == s.raw.end()) throw ContractError(path + " has no raw stream for '" + tool + "'");
    return axis_combine(it->second, CombineMode::F3);
  }
  if (stream == "post") {
    const auto it = s.post.find(tool);
    if (it == s.post.end()) throw ContractError(path + " has no post stream for '" + tool + "'");
    return SampleBlock(it->second, s.rate);
  }
  for (std::size_t l = 0; l < s.output_lanes.size(); ++l) {
    if (s.output_lanes[l] == tool) return SampleBlock(s.output.at(l), s.rate);
  }
  throw ContractError(path + " has no output lane for '" + tool + "'");
}

int cmd_fidelity(const std::string& a, const std::string& b, std::vector<std::string> tools,
                 const std::string& a_stream, const std::string& b_stream, double max_lag_s,
                 const std::string& out) {
  if (tools.empty()) tools = {"left", "right"};
  std::vector<FidelityReport> reports;
  for (const auto& tool : tools) {
    FidelityOptions o;
    o.channel = tool;
    o.max_lag_s = max_lag_s;
    reports.push_back(fidelity_report(load_stream(a, tool, a_stream), load_stream(b, tool, b_stream), o));
  }
  std::cout << reports_text(reports);
  if (!out.empty()) write_file(fs::path(out) / "fidelity.csv", reports_csv(reports));
  return 0;
}

int cmd_trials(const std::vector<std::string>& sessions, const std::string& out, double accel,
               double force, bool per_axis, const std::string& force_zcr) {
  trial::TrialOptions o;
  o.thresholds = {accel, force};
  o.accel_stream = per_axis ? trial::AccelStream::per_axis : trial::AccelStream::summed;
  if (force_zcr == "magnitude") o.force_zcr = trial::ForceZcr::magnitude;
  else if (force_zcr != "axis-mean") throw ContractError("--force-zcr must be axis-mean or magnitude");
  std::vector<trial::TrialMetrics> trials;
  std::vector<std::string> ids;
  nlohmann::json all = nlohmann::json::array();
  for (const auto& dir : sessions) {
    trials.push_back(trial::trial_report(io::load_session(dir), o));
    ids.push_back(fs::path(dir).filename().string());
    nlohmann::json j = trial::to_json(trials.back());
    j["trial"] = ids.back();
    all.push_back(j);
  }
  const std::string csv = trial::trials_csv(ids, trials, o.expected_tools);
  std::cout << csv;
  if (!out.empty()) {
    write_file(fs::path(out) / "trials.csv", csv);
    write_file(fs::path(out) / "trials.json", all.dump(2) + "\n");
  }
  return 0;
}

int cmd_validate(const std::vector<std::string>& sessions, const std::string& config, const std::string& script) {
  int problems = 0;
  for (const auto& dir : sessions) {
    for (const auto& p : io::validate_session(dir)) {
      std::cout << dir << ": " << p << "\n";
      ++problems;
    }
  }
  if (!config.empty()) {
    try {
      validate(load_pipeline_config(config));
    } catch (const Error& ex) {
      std::cout << config << ": " << ex.what() << "\n";
      ++problems;
    }
  }
  if (!script.empty()) {
    try {
      synth::validate(synth::load_script(script));
    } catch (const Error& ex) {
      std::cout << script << ": " << ex.what() << "\n";
      ++problems;
    }
  }
  if (problems == 0) std::cout << "ok\n";
  return problems == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vibromix: vibrotactile feedback engine and analysis toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vibromix 0.1.0");

  PipelineFlags run_flags;
  std::string run_out, run_controls;
  std::optional<double> run_duration;
  bool run_realtime = false;
  auto* run = app.add_subcommand("run", "Run the pipeline over a session, scenario or network source");
  run_flags.add(run);
  run->add_option("--out", run_out, "Session directory to record into");
  run->add_option("--controls", run_controls, "Timed control script JSON")->check(CLI::ExistingFile);
  run->add_option("--duration", run_duration, "Seconds to process (default: longest source)");
  run->add_flag("--realtime", run_realtime, "Pace processing to the sample clock");

  PipelineFlags serve_flags;
  std::optional<int> serve_port;
  std::string serve_host = "127.0.0.1", serve_out;
  std::optional<double> serve_duration;
  auto* serve = app.add_subcommand("serve", "Run the pipeline live with the WebSocket control service");
  serve_flags.add(serve);
  serve->add_option("--port", serve_port, "Control port (else VIBROMIX_PORT, else 8765; 0 = ephemeral)");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--duration", serve_duration, "Stop after this many seconds");
  serve->add_option("--out", serve_out, "Session directory recorded for the whole run");

  std::string synth_script, synth_out;
  std::optional<std::uint64_t> synth_seed;
  std::optional<double> synth_rate;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic contact scenario to a session directory");
  synth_cmd->add_option("--script,--scenario", synth_script, "Scenario JSON (default: built-in demo)")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "Noise seed");
  synth_cmd->add_option("--rate", synth_rate, "Sample rate in Hz");

  auto* analyze = app.add_subcommand("analyze", "Offline analyses");
  analyze->require_subcommand(1);
  std::string pl_manifest, pl_out;
  double pl_margin = 0.0;
  std::optional<double> pl_ceiling;
  auto* placement_cmd = analyze->add_subcommand("placement", "SNR placement and actuator energy-ratio reports");
  placement_cmd->add_option("--manifest", pl_manifest, "Dataset manifest CSV")->required()->check(CLI::ExistingFile);
  placement_cmd->add_option("--out", pl_out, "Directory for report CSVs");
  placement_cmd->add_option("--rotation-margin-db", pl_margin, "Rotation SNR may exceed contact SNR by this much");
  placement_cmd->add_option("--rotation-ceiling-db", pl_ceiling, "Absolute ceiling on rotation SNR");

  std::string fa, fb, fa_stream = "raw", fb_stream = "output", f_out;
  std::vector<std::string> f_tools;
  double f_lag = kDefaultMaxLagS;
  auto* fidelity_cmd = analyze->add_subcommand("fidelity", "Cross-correlation fidelity between tool and handle");
  fidelity_cmd->add_option("--tool-side,--a", fa, "Tool-side session directory or WAV")->required();
  fidelity_cmd->add_option("--handle-side,--b", fb, "Handle-side session directory or WAV")->required();
  fidelity_cmd->add_option("--channel", f_tools, "Channels to compare (default left and right)");
  fidelity_cmd->add_option("--a-stream", fa_stream, "Stream of a session: raw, post or output")
      ->check(CLI::IsMember({"raw", "post", "output"}));
  fidelity_cmd->add_option("--b-stream", fb_stream, "Stream of b session: raw, post or output")
      ->check(CLI::IsMember({"raw", "post", "output"}));
  fidelity_cmd->add_option("--max-lag-s", f_lag, "Lag search window in seconds");
  fidelity_cmd->add_option("--out", f_out, "Directory for fidelity.csv");

  std::vector<std::string> tm_sessions;
  std::string tm_out, tm_force_zcr = "axis-mean";
  double tm_accel = trial::kAccelThreshold, tm_force = trial::kForceThreshold;
  bool tm_per_axis = false;
  auto* trials_cmd = app.add_subcommand("trial-metrics", "Thresholded RMS and ZCR per recorded trial");
  trials_cmd->add_option("--in", tm_sessions, "Session directories")->required();
  trials_cmd->add_option("--out", tm_out, "Directory for trials.csv and trials.json");
  trials_cmd->add_option("--accel-threshold", tm_accel, "Acceleration gate in m/s^2");
  trials_cmd->add_option("--force-threshold", tm_force, "Force gate in N");
  trials_cmd->add_flag("--per-axis", tm_per_axis, "Also report per-axis acceleration metrics");
  trials_cmd->add_option("--force-zcr", tm_force_zcr, "axis-mean or magnitude");

  std::vector<std::string> v_sessions;
  std::string v_config, v_script;
  auto* validate_cmd = app.add_subcommand("validate", "Check session directories, configs and scenarios");
  validate_cmd->add_option("--in", v_sessions, "Session directories");
  validate_cmd->add_option("--config", v_config, "Pipeline config JSON");
  validate_cmd->add_option("--script", v_script, "Scenario JSON");

  std::string schema_name;
  auto* schema_cmd = app.add_subcommand("schema", "Print a JSON schema (control or manifest)");
  schema_cmd->add_option("name", schema_name, "control or manifest")->required()
      ->check(CLI::IsMember({"control", "manifest"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(run_flags, run_out, run_controls, run_duration, run_realtime);
    if (*serve) return cmd_serve(serve_flags, serve_port, serve_host, serve_duration, serve_out);
    if (*synth_cmd) return cmd_synth(synth_script, synth_out, synth_seed, synth_rate);
    if (*placement_cmd) return cmd_placement(pl_manifest, pl_out, pl_margin, pl_ceiling);
    if (*fidelity_cmd) return cmd_fidelity(fa, fb, f_tools, fa_stream, fb_stream, f_lag, f_out);
    if (*trials_cmd) return cmd_trials(tm_sessions, tm_out, tm_accel, tm_force, tm_per_axis, tm_force_zcr);
    if (*validate_cmd) return cmd_validate(v_sessions, v_config, v_script);
    if (*schema_cmd) {
      std::cout << (schema_name == "control" ? control_protocol_schema() : io::manifest_schema()).dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "vibromix: error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
