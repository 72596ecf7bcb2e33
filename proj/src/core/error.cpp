// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "embrec/error.hpp"

namespace embrec {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kInvalid: return "invalid";
    case ErrorKind::kAlreadyExists: return "already-exists";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kDuplicate: return "duplicate";
    case ErrorKind::kMode: return "mode";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kCorruption: return "corruption";
    case ErrorKind::kEquivalence: return "equivalence";
  }
  return "unknown";
}

}  // namespace embrec
