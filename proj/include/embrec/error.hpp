// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace embrec {

enum class ErrorKind {
  kConfig,
  kInput,
  kShape,
  kRange,
  kInvalid,
  kAlreadyExists,
  kIo,
  kDuplicate,
  kMode,
  kNotFound,
  kCorruption,
  kEquivalence,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries one of the categories above so
// that callers (the CLI, host bindings) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace embrec
