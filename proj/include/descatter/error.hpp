// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace descatter {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or image extents disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration, hyperparameter, or precondition on user input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in the wrong lifecycle state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file. `offset` is the byte position where parsing
/// failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Checkpoint architecture does not match the requested model.
class ArchitectureMismatch : public Error {
 public:
  struct Field {
    std::string name;
    std::string expected;
    std::string actual;
  };

  explicit ArchitectureMismatch(std::vector<Field> fields)
      : Error(describe(fields)), fields_(std::move(fields)) {}

  const std::vector<Field>& fields() const noexcept { return fields_; }

 private:
  static std::string describe(const std::vector<Field>& fields) {
    std::string msg = "architecture mismatch:";
    for (const auto& f : fields) {
      msg += " " + f.name + " (expected " + f.expected + ", got " + f.actual + ");";
    }
    return msg;
  }

  std::vector<Field> fields_;
};

/// Training diverged (NaN/Inf loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace descatter
