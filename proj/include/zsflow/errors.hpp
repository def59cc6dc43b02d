// Copyright 2026 The zsflow Authors.
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zsflow {

// Root of all library errors. The CLI maps each subclass to a stable exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad dimensions, invalid hyper-parameters, malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked out of order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data. Carries the offending line when known.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Files that cannot be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during training, mining or inference.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace zsflow
