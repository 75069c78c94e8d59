// Copyright 2026 The smodice-tabular Authors.
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
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace smodice {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model, policy or distribution violates its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// p has mass where q has none.
class SupportMismatchError : public Error {
 public:
  SupportMismatchError(std::size_t index, double p, double q)
      : Error("support mismatch at element " + std::to_string(index) + ": p=" +
              std::to_string(p) + " but q=" + std::to_string(q)),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// An iterative optimizer produced a non-finite objective.
class SolverDivergedError : public Error {
 public:
  SolverDivergedError(std::string_view what, long step, double lr)
      : Error(std::string(what) + " diverged at step " + std::to_string(step) +
              " (lr=" + std::to_string(lr) + "); try a smaller learning rate"),
        step_(step),
        lr_(lr) {}
  long step() const { return step_; }
  double lr() const { return lr_; }

 private:
  long step_;
  double lr_;
};

/// Brute-force enumeration was asked to enumerate too many policies.
class InstanceTooLargeError : public Error {
 public:
  explicit InstanceTooLargeError(double count)
      : Error("instance too large: " + std::to_string(count) +
              " deterministic policies (limit 1e6)"),
        count_(count) {}
  double count() const { return count_; }

 private:
  double count_;
};

/// Malformed input file; line is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::string_view source, std::size_t line, std::string_view msg)
      : Error(std::string(source) + (line ? ":" + std::to_string(line) : "") + ": " +
              std::string(msg)),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Receives non-fatal warnings (unreachable goals, coverage violations).
using WarningSink = std::function<void(std::string_view)>;

inline WarningSink stderr_warnings() {
  return [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
}

inline void warn(const WarningSink& sink, std::string_view msg) {
  if (sink) sink(msg);
}

}  // namespace smodice
