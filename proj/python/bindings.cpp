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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "vibromix/control.hpp"
#include "vibromix/control_service.hpp"
#include "vibromix/error.hpp"
#include "vibromix/fidelity.hpp"
#include "vibromix/filter.hpp"
#include "vibromix/pipeline.hpp"
#include "vibromix/placement.hpp"
#include "vibromix/synth.hpp"
#include "vibromix/trial_metrics.hpp"

namespace py = pybind11;
using namespace vibromix;

namespace {

using Axes = std::tuple<std::vector<double>, std::vector<double>, std::vector<double>>;

// JSON crosses the boundary as text; Python's json module does the object mapping.
nlohmann::json from_py(const py::object& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

TriAxisSeries series(const Axes& a, double rate) {
  return TriAxisSeries(std::get<0>(a), std::get<1>(a), std::get<2>(a), rate);
}

py::dict run_summary(const SessionLog& log) {
  py::dict d;
  d["samples"] = log.samples;
  d["blocks"] = log.blocks;
  d["deadline_misses"] = log.deadline_misses;
  d["underrun_samples"] = log.underrun_samples;
  d["clamp_count"] = log.clamp_count;
  d["worst_block_s"] = log.worst_block_s;
  py::dict outputs;
  for (std::size_t i = 0; i < log.output.size() && i < log.output_lanes.size(); ++i) {
    outputs[py::str(log.output_lanes[i])] = log.output[i];
  }
  d["output"] = outputs;
  py::list params;
  for (const auto& p : log.params) {
    py::dict e;
    e["sample_index"] = p.sample_index;
    e["time_s"] = p.time_s;
    e["client"] = p.client;
    e["op"] = p.op;
    e["channel"] = p.channel;
    e["requested"] = p.requested;
    e["applied"] = p.applied;
    e["clamped"] = p.clamped;
    params.append(e);
  }
  d["params"] = params;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "vibromix core bindings";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<RangeError>(m, "RangeError", error);
  py::register_exception<DesignError>(m, "DesignError", error);
  py::register_exception<ContractError>(m, "ContractError", error);
  py::register_exception<AnalysisError>(m, "AnalysisError", error);
  py::register_exception<SchemaError>(m, "SchemaError", error);
  py::register_exception<BuildError>(m, "BuildError", error);
  py::register_exception<ParseError>(m, "ParseError", error);

  py::class_<BiquadCascade>(m, "Filter")
      .def_property_readonly("rate", &BiquadCascade::rate)
      .def_property_readonly("sections", [](const BiquadCascade& c) { return c.sections().size(); })
      .def("magnitude", &BiquadCascade::magnitude, py::arg("freq_hz"))
      .def("group_delay_samples", &BiquadCascade::group_delay_samples, py::arg("freq_hz"))
      .def("reset", &BiquadCascade::reset)
      .def(
          "process",
          [](BiquadCascade& c, const std::vector<double>& in) {
            std::vector<double> out(in.size());
            c.process(in, out);
            return out;
          },
          py::arg("samples"), "Filters samples, carrying state across calls.");

  m.def(
      "design_bandpass",
      [](double low, double high, int order, double rate, bool bypass) {
        return design_bandpass(FilterSpec{low, high, order, bypass}, rate);
      },
      py::arg("low_cut") = 80.0, py::arg("high_cut") = 1000.0, py::arg("order") = 4, py::arg("rate") = 8000.0,
      py::arg("bypass") = false);
  m.def(
      "band_center_hz",
      [](double low, double high, int order, double rate) {
        return band_center_hz(FilterSpec{low, high, order, false}, rate);
      },
      py::arg("low_cut") = 80.0, py::arg("high_cut") = 1000.0, py::arg("order") = 4, py::arg("rate") = 8000.0);

  m.def(
      "ase", [](const Axes& a, double rate) { return placement::ase(series(a, rate)); }, py::arg("axes"),
      py::arg("rate") = 8000.0, "Per-axis energy of (x, y, z).");
  m.def(
      "e_ratio",
      [](const Axes& handle, const Axes& source, double rate) {
        return placement::e_ratio(series(handle, rate), series(source, rate));
      },
      py::arg("handle"), py::arg("source"), py::arg("rate") = 8000.0);
  m.def(
      "snr_db",
      [](const Axes& signal, const Axes& noise, double rate) {
        return placement::snr_db(series(signal, rate), series(noise, rate));
      },
      py::arg("signal"), py::arg("noise"), py::arg("rate") = 8000.0);

  m.def(
      "xcorr_lag",
      [](const std::vector<double>& a, const std::vector<double>& b, double rate, double max_lag_s) {
        return fidelity::xcorr_lag(SampleBlock(a, rate), SampleBlock(b, rate), max_lag_s);
      },
      py::arg("a"), py::arg("b"), py::arg("rate") = 8000.0, py::arg("max_lag_s") = 0.5);
  m.def(
      "aligned_r",
      [](const std::vector<double>& a, const std::vector<double>& b, std::int64_t lag, double rate) {
        return fidelity::aligned_r(SampleBlock(a, rate), SampleBlock(b, rate), lag);
      },
      py::arg("a"), py::arg("b"), py::arg("lag"), py::arg("rate") = 8000.0);

  m.def(
      "gate",
      [](const std::vector<double>& x, double threshold, double rate) {
        return trial::gate(SampleBlock(x, rate), threshold).samples;
      },
      py::arg("samples"), py::arg("threshold"), py::arg("rate") = 8000.0);
  m.def(
      "zcr", [](const std::vector<double>& x, double rate) { return trial::zcr(SampleBlock(x, rate)); },
      py::arg("samples"), py::arg("rate") = 8000.0);
  m.def(
      "rms", [](const std::vector<double>& x, double rate) { return trial::rms(SampleBlock(x, rate)); },
      py::arg("samples"), py::arg("rate") = 8000.0);

  m.def("contact_energy_closed_form", &synth::contact_energy_closed_form, py::arg("amplitude"),
        py::arg("frequency_hz"), py::arg("tau_s"));
  m.def(
      "demo_script", [](std::uint64_t seed) { return to_py(synth::to_json(synth::demo_script(seed))); },
      py::arg("seed") = 1);
  m.def(
      "render_scenario",
      [](const py::object& script) {
        const synth::RenderedScenario r = synth::render_scenario(synth::script_from_json(from_py(script)));
        py::dict tools;
        for (const auto& [id, s] : r.tools) tools[py::str(id)] = py::make_tuple(s.x(), s.y(), s.z());
        return tools;
      },
      py::arg("script"), "Renders a scenario script to {tool: (x, y, z)}.");
  m.def("control_protocol_schema", [] { return to_py(control_protocol_schema()); });

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init([](const py::object& config) { return Pipeline::build(pipeline_config_from_json(from_py(config))); }),
           py::arg("config"))
      .def_static(
          "from_script",
          [](const py::object& script) {
            return Pipeline::build(default_pipeline_config(synth::script_from_json(from_py(script))));
          },
          py::arg("script"), "Demo graph: one synthetic source per tool, each to its own output lane.")
      .def_property_readonly("config", [](const Pipeline& p) { return to_py(to_json(p.config())); })
      .def_property_readonly("latency", [](const Pipeline& p) { return to_py(to_json(p.latency())); })
      .def(
          "run",
          [](Pipeline& p, std::optional<std::int64_t> max_samples, bool realtime, const py::object& script) {
            RunOptions opts;
            opts.realtime = realtime;
            opts.max_samples = max_samples;
            if (!script.is_none()) opts.script = control_script_from_json(from_py(script), p.config().rate);
            SessionLog log;
            {
              py::gil_scoped_release release;
              log = p.run(opts);
            }
            return run_summary(log);
          },
          py::arg("max_samples") = py::none(), py::arg("realtime") = false, py::arg("script") = py::none())
      .def(
          "start",
          [](Pipeline& p, std::optional<std::int64_t> max_samples) {
            RunOptions opts;
            opts.realtime = true;
            opts.max_samples = max_samples;
            p.start(std::move(opts));
          },
          py::arg("max_samples") = py::none())
      .def(
          "stop",
          [](Pipeline& p) {
            SessionLog log;
            {
              py::gil_scoped_release release;
              log = p.stop();
            }
            return run_summary(log);
          })
      .def_property_readonly("running", &Pipeline::running)
      .def(
          "update_param",
          [](Pipeline& p, const py::object& message) {
            return to_py(to_json(p.update_param(parse_control_message(from_py(message)))));
          },
          py::arg("message"))
      .def("telemetry", [](const Pipeline& p) { return to_py(to_json(p.telemetry())); })
      .def("status", [](const Pipeline& p) { return to_py(to_json(p.status())); });

  py::class_<ControlService>(m, "ControlService")
      .def(py::init([](Pipeline& p, int port, const std::string& host, double telemetry_hz) {
             ServiceOptions opts;
             opts.host = host;
             opts.port = static_cast<std::uint16_t>(port);
             opts.telemetry_hz = telemetry_hz;
             return std::make_unique<ControlService>(p, opts);
           }),
           py::arg("pipeline"), py::arg("port") = 0, py::arg("host") = "127.0.0.1", py::arg("telemetry_hz") = 10.0,
           py::keep_alive<1, 2>())
      .def_property_readonly("port", &ControlService::port)
      .def_property_readonly("client_count", &ControlService::client_count)
      .def("status", [](const ControlService& s) { return to_py(s.status_json()); })
      .def("stop", &ControlService::stop, py::call_guard<py::gil_scoped_release>());
}
