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

#include <cmath>
#include <unistd.h>

#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vibromix/diagnostics.hpp"
#include "vibromix/signal.hpp"

namespace testing {

inline std::vector<double> sine(double freq, double amp, std::size_t n, double rate, double phase = 0.0) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(k) / rate + phase);
  }
  return v;
}

inline std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline vibromix::TriAxisSeries random_series(std::size_t n, std::uint64_t seed, double rate = 8000.0) {
  return vibromix::TriAxisSeries(gaussian(n, seed), gaussian(n, seed + 1), gaussian(n, seed + 2), rate);
}

/// Collects warnings for the lifetime of the object.
struct WarningLog {
  std::vector<std::string> messages;
  vibromix::ScopedWarningHandler scope{[this](std::string_view m) { messages.emplace_back(m); }};
};

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("vibromix_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str(const std::string& leaf = {}) const { return leaf.empty() ? path.string() : (path / leaf).string(); }
};

}  // namespace testing
