// Copyright 2026 The decmom Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DECMOM_ERROR_HPP
#define DECMOM_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace decmom {

/// Bad argument to a library call (sizes, ranges, malformed matrices).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Graph-level failure, e.g. a disconnected communication graph.
class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation called on an object in the wrong state (empty shard, GT-only metric, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// File could not be read or parsed. `line` is 0 when not applicable.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Run configuration rejected. Carries the dotted key path when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what, std::size_t line = 0)
      : std::runtime_error(format(key, what, line)), key_(key), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, const std::string& what, std::size_t line) {
    std::string msg = key.empty() ? what : key + ": " + what;
    if (line != 0) msg += " (line " + std::to_string(line) + ")";
    return msg;
  }
  std::string key_;
  std::size_t line_;
};

/// Iterates blew up (non-finite loss or a parameter beyond the magnitude guard).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, std::size_t step, std::size_t worker, const std::string& what)
      : std::runtime_error("diverged at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step) + ", worker " + std::to_string(worker) + ": " +
                           what),
        epoch_(epoch),
        step_(step),
        worker_(worker) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t step() const noexcept { return step_; }
  std::size_t worker() const noexcept { return worker_; }

 private:
  std::size_t epoch_;
  std::size_t step_;
  std::size_t worker_;
};

}  // namespace decmom

#endif  // DECMOM_ERROR_HPP
