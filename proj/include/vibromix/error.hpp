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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vibromix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time window or index lies outside the valid range of a series.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A filter specification cannot be realized at the requested rate.
class DesignError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition (rate mismatch, bad shape).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// An analysis could not produce a value (zero variance, zero energy, ...).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

/// Required columns or fields are missing from an input document.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Pipeline configuration could not be turned into a runnable graph.
class BuildError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary input. Carries the byte offset where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace vibromix
