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

#include "vibromix/placement.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "vibromix/error.hpp"
#include "vibromix/session_io.hpp"

namespace vibromix::placement {
namespace {

constexpr Action kActiveActions[] = {Action::rotation, Action::motion, Action::contact};

double mean_power(const TriAxisSeries& s) {
  if (s.empty()) throw AnalysisError("cannot compute RMS of an empty series");
  double acc = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (double v : s.axis(a)) acc += v * v;
  }
  return acc / static_cast<double>(s.size());
}

double axis_power(const TriAxisSeries& s, std::size_t axis) {
  if (s.empty()) throw AnalysisError("cannot compute RMS of an empty series");
  double acc = 0.0;
  for (double v : s.axis(axis)) acc += v * v;
  return acc / static_cast<double>(s.size());
}

double power_ratio_db(double signal_power, double noise_power) {
  if (!(noise_power > 0.0)) {
    throw AnalysisError("noise recording has zero power; SNR is undefined");
  }
  return 10.0 * std::log10(signal_power / noise_power);
}

void check_pair(const LabeledRecording& signal, const LabeledRecording& noise) {
  if (noise.action != Action::idle) throw ContractError("noise recording must be an idle recording");
  if (signal.location != noise.location) {
    throw ContractError("signal and noise recordings come from different locations");
  }
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(Action action) {
  switch (action) {
    case Action::rotation: return "rotation";
    case Action::motion: return "motion";
    case Action::contact: return "contact";
    case Action::idle: return "idle";
  }
  return "idle";
}

Action action_from_string(const std::string& name) {
  if (name == "rotation") return Action::rotation;
  if (name == "motion") return Action::motion;
  if (name == "contact") return Action::contact;
  if (name == "idle") return Action::idle;
  throw SchemaError("unknown action '" + name + "'");
}

double rms3(const TriAxisSeries& series) { return std::sqrt(mean_power(series)); }

double axis_rms(const TriAxisSeries& series, std::size_t axis) {
  return std::sqrt(axis_power(series, axis));
}

double snr_db(const TriAxisSeries& signal, const TriAxisSeries& noise) {
  return power_ratio_db(mean_power(signal), mean_power(noise));
}

std::array<double, 3> snr_db_per_axis(const TriAxisSeries& signal, const TriAxisSeries& noise) {
  std::array<double, 3> out{};
  for (std::size_t a = 0; a < 3; ++a) {
    out[a] = power_ratio_db(axis_power(signal, a), axis_power(noise, a));
  }
  return out;
}

double snr_db(const LabeledRecording& signal, const LabeledRecording& noise) {
  check_pair(signal, noise);
  return snr_db(signal.series, noise.series);
}

std::array<double, 3> snr_db_per_axis(const LabeledRecording& signal,
                                      const LabeledRecording& noise) {
  check_pair(signal, noise);
  return snr_db_per_axis(signal.series, noise.series);
}

std::array<double, 3> ase(const TriAxisSeries& series) {
  std::array<double, 3> out{};
  const double dt = 1.0 / series.rate();
  for (std::size_t a = 0; a < 3; ++a) {
    double acc = 0.0;
    for (double v : series.axis(a)) acc += v * v;
    out[a] = acc * dt;
  }
  return out;
}

double ase(const SampleBlock& block) {
  double acc = 0.0;
  for (double v : block.samples) acc += v * v;
  return acc / block.rate;
}

double e_ratio(const TriAxisSeries& handle, const TriAxisSeries& source) {
  if (handle.rate() != source.rate() || handle.size() != source.size()) {
    throw ContractError("e_ratio requires recordings of equal rate and duration");
  }
  const auto h = ase(handle);
  const auto s = ase(source);
  const double source_total = s[0] + s[1] + s[2];
  if (!(source_total > 0.0)) throw AnalysisError("source recording has zero energy");
  return (h[0] + h[1] + h[2]) / source_total;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

const SnrCell* SnrReport::find(const std::string& location, Action action) const {
  for (const auto& c : cells) {
    if (c.location == location && c.action == action) return &c;
  }
  return nullptr;
}

SnrReport placement_report(const std::vector<LabeledRecording>& dataset,
                           const SelectionRule& rule) {
  SnrReport report;
  for (const auto& r : dataset) {
    if (std::find(report.locations.begin(), report.locations.end(), r.location) ==
        report.locations.end()) {
      report.locations.push_back(r.location);
    }
  }

  for (const auto& location : report.locations) {
    std::vector<const LabeledRecording*> idle;
    for (const auto& r : dataset) {
      if (r.location == location && r.action == Action::idle) idle.push_back(&r);
    }
    if (idle.empty()) {
      report.omitted.push_back({location, "no idle (noise) recording"});
      continue;
    }
    // Noise power pooled over all idle trials at this location.
    double noise = 0.0;
    std::array<double, 3> noise_axis{};
    for (const auto* r : idle) {
      noise += mean_power(r->series);
      for (std::size_t a = 0; a < 3; ++a) noise_axis[a] += axis_power(r->series, a);
    }
    noise /= static_cast<double>(idle.size());
    for (double& v : noise_axis) v /= static_cast<double>(idle.size());
    if (!(noise > 0.0)) {
      report.omitted.push_back({location, "idle recording has zero power"});
      continue;
    }

    for (Action action : kActiveActions) {
      std::vector<double> values;
      std::array<std::vector<double>, 3> axis_values;
      bool axis_ok = true;
      for (const auto& r : dataset) {
        if (r.location != location || r.action != action) continue;
        values.push_back(power_ratio_db(mean_power(r.series), noise));
        if (action == Action::contact) {
          for (std::size_t a = 0; a < 3; ++a) {
            if (noise_axis[a] > 0.0) {
              axis_values[a].push_back(power_ratio_db(axis_power(r.series, a), noise_axis[a]));
            } else {
              axis_ok = false;
            }
          }
        }
      }
      if (values.empty()) continue;
      SnrCell cell{location, action, mean_std(values), std::nullopt};
      if (action == Action::contact && axis_ok) {
        cell.per_axis = std::array<MeanStd, 3>{mean_std(axis_values[0]), mean_std(axis_values[1]),
                                               mean_std(axis_values[2])};
      }
      report.cells.push_back(cell);
    }
  }

  std::vector<std::string> with_contact;
  for (const auto& location : report.locations) {
    if (report.find(location, Action::contact)) with_contact.push_back(location);
  }
  if (with_contact.size() < 2) {
    report.selection_note = with_contact.empty() ? "no location has contact SNR; no selection"
                                                 : "single location; no selection";
    return report;
  }

  std::vector<std::pair<std::string, double>> eligible;
  for (const auto& location : with_contact) {
    const double contact = report.find(location, Action::contact)->snr_db.mean;
    if (const SnrCell* rot = report.find(location, Action::rotation)) {
      const double rotation = rot->snr_db.mean;
      const bool above_contact = rotation > contact + rule.rotation_margin_db;
      const bool above_ceiling = rule.rotation_ceiling_db && rotation > *rule.rotation_ceiling_db;
      if (above_contact || above_ceiling) {
        report.excluded.push_back(location);
        continue;
      }
    }
    eligible.emplace_back(location, contact);
  }
  if (eligible.empty()) {
    report.selection_note = "every location fails the rotation rule; no selection";
    return report;
  }
  double top = eligible.front().second;
  for (const auto& [loc, v] : eligible) top = std::max(top, v);
  std::vector<std::string> winners;
  for (const auto& [loc, v] : eligible) {
    if (top - v <= rule.tie_tolerance_db) winners.push_back(loc);
  }
  if (winners.size() == 1) {
    report.best = winners.front();
    report.selection_note = "highest contact SNR among locations passing the rotation rule";
  } else {
    report.tied = winners;
    report.selection_note = "tie in contact SNR; no location selected";
  }
  return report;
}

EnergyRatioReport actuator_report(const std::vector<ActuatorPair>& pairs) {
  EnergyRatioReport report;
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> values;
  for (const auto& p : pairs) {
    if (!values.contains(p.location)) order.push_back(p.location);
    values[p.location].push_back(e_ratio(p.handle, p.source));
  }
  for (const auto& location : order) {
    report.rows.push_back({location, mean_std(values[location])});
  }
  if (report.rows.size() < 2) return report;
  double top = report.rows.front().e_ratio.mean;
  for (const auto& r : report.rows) top = std::max(top, r.e_ratio.mean);
  std::vector<std::string> winners;
  for (const auto& r : report.rows) {
    if (top - r.e_ratio.mean <= 1e-12 * std::max(1.0, top)) winners.push_back(r.location);
  }
  if (winners.size() == 1) {
    report.best = winners.front();
  } else {
    report.tied = winners;
  }
  return report;
}

std::string snr_report_csv(const SnrReport& report) {
  std::ostringstream os;
  os << "location,action,axis,mean_snr_db,std_snr_db,n_trials\n";
  static const char* kAxes[] = {"x", "y", "z"};
  for (const auto& c : report.cells) {
    os << c.location << ',' << to_string(c.action) << ",xyz," << fmt(c.snr_db.mean, 10) << ','
       << fmt(c.snr_db.std, 10) << ',' << c.snr_db.n << '\n';
    if (c.per_axis) {
      for (std::size_t a = 0; a < 3; ++a) {
        const auto& m = (*c.per_axis)[a];
        os << c.location << ',' << to_string(c.action) << ',' << kAxes[a] << ','
           << fmt(m.mean, 10) << ',' << fmt(m.std, 10) << ',' << m.n << '\n';
      }
    }
  }
  return os.str();
}

std::string energy_ratio_report_csv(const EnergyRatioReport& report) {
  std::ostringstream os;
  os << "location,mean_e_ratio,std_e_ratio,n_trials,best\n";
  for (const auto& r : report.rows) {
    os << r.location << ',' << fmt(r.e_ratio.mean, 10) << ',' << fmt(r.e_ratio.std, 10) << ','
       << r.e_ratio.n << ',' << (report.best == r.location ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string report_text(const SnrReport& snr, const EnergyRatioReport* energy) {
  std::ostringstream os;
  os << "Accelerometer placement (SNR, dB, mean +/- std)\n";
  for (const auto& location : snr.locations) {
    os << "  " << location << ":";
    bool any = false;
    for (Action action : kActiveActions) {
      if (const SnrCell* c = snr.find(location, action)) {
        os << "  " << to_string(action) << " " << fmt(c->snr_db.mean, 4) << " +/- "
           << fmt(c->snr_db.std, 3);
        any = true;
      }
    }
    if (!any) os << "  (omitted)";
    os << '\n';
  }
  for (const auto& o : snr.omitted) os << "  omitted " << o.location << ": " << o.reason << '\n';
  for (const auto& e : snr.excluded) os << "  excluded " << e << ": rotation SNR too high\n";
  if (snr.best) {
    os << "  selected: " << *snr.best << '\n';
  } else if (!snr.tied.empty()) {
    os << "  tie between:";
    for (const auto& t : snr.tied) os << ' ' << t;
    os << '\n';
  }
  os << "  note: " << snr.selection_note << '\n';
  if (energy) {
    os << "Actuator placement (E_ratio, mean +/- std)\n";
    for (const auto& r : energy->rows) {
      os << "  " << r.location << ": " << fmt(r.e_ratio.mean, 4) << " +/- "
         << fmt(r.e_ratio.std, 3) << '\n';
    }
    if (energy->best) os << "  selected: " << *energy->best << '\n';
  }
  return os.str();
}

Dataset load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const auto rows = io::read_csv_table(manifest_path);
  for (const char* col : {"path", "location", "action", "trial"}) {
    if (!rows.has_column(col)) {
      throw SchemaError("dataset manifest '" + manifest_path + "' lacks column '" + col + "'");
    }
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  Dataset ds;
  struct Half {
    std::optional<TriAxisSeries> handle, source;
  };
  std::vector<std::pair<std::string, int>> pair_order;
  std::map<std::pair<std::string, int>, Half> halves;

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const fs::path path = base / rows.at(i, "path");
    const std::string role = rows.has_column("role") && !rows.at(i, "role").empty()
                                 ? rows.at(i, "role")
                                 : std::string("sensor");
    const std::string location = rows.at(i, "location");
    const int trial = std::stoi(rows.at(i, "trial"));
    TriAxisSeries series = io::read_recording(path.string());
    if (role == "sensor") {
      ds.recordings.push_back(
          {std::move(series), location, action_from_string(rows.at(i, "action")), trial});
    } else if (role == "handle" || role == "source") {
      const auto key = std::make_pair(location, trial);
      if (!halves.contains(key)) pair_order.push_back(key);
      (role == "handle" ? halves[key].handle : halves[key].source) = std::move(series);
    } else {
      throw SchemaError("row " + std::to_string(i + 1) + ": unknown role '" + role + "'");
    }
  }
  for (const auto& key : pair_order) {
    auto& h = halves[key];
    if (!h.handle || !h.source) {
      throw SchemaError("actuator pair (" + key.first + ", trial " + std::to_string(key.second) +
                        ") needs both a handle and a source recording");
    }
    ds.actuator_pairs.push_back({key.first, key.second, std::move(*h.handle), std::move(*h.source)});
  }
  return ds;
}

}  // namespace vibromix::placement
