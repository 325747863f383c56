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

#include <functional>
#include <string_view>

namespace vibromix {

using WarningHandler = std::function<void(std::string_view)>;

// Non-fatal conditions (gain clamped, frequency outside band, resampled
// input) are reported here. The default handler prints to stderr.
void warn(std::string_view message);

// Installs a new handler and returns the previous one. Passing an empty
// function restores the stderr handler.
WarningHandler set_warning_handler(WarningHandler handler);

// RAII capture used mainly by tests and the CLI.
class ScopedWarningHandler {
 public:
  explicit ScopedWarningHandler(WarningHandler handler)
      : previous_(set_warning_handler(std::move(handler))) {}
  ~ScopedWarningHandler() { set_warning_handler(std::move(previous_)); }
  ScopedWarningHandler(const ScopedWarningHandler&) = delete;
  ScopedWarningHandler& operator=(const ScopedWarningHandler&) = delete;

 private:
  WarningHandler previous_;
};

}  // namespace vibromix
