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

#include "vibromix/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace vibromix {
namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler h;
  return h;
}

}  // namespace

void warn(std::string_view message) {
  WarningHandler h;
  {
    std::lock_guard lock(handler_mutex());
    h = handler_slot();
  }
  if (h) {
    h(message);
  } else {
    std::cerr << "vibromix: warning: " << message << '\n';
  }
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  WarningHandler previous = std::move(handler_slot());
  handler_slot() = std::move(handler);
  return previous;
}

}  // namespace vibromix
