// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "embrec/core.hpp"
#include "embrec/error.hpp"

namespace embrec {

float Rng::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::kInvalid, "uniform range requires finite lo < hi");
  }
  constexpr double kTwoTo64 = 18446744073709551616.0;
  const double unit = static_cast<double>(next()) / kTwoTo64;
  float value = static_cast<float>(lo + (hi - lo) * unit);
  // double(2^64 - 1) rounds up to 2^64 and the float cast may land on hi.
  if (static_cast<double>(value) >= hi) {
    value = std::nextafter(static_cast<float>(hi), -std::numeric_limits<float>::infinity());
    while (static_cast<double>(value) >= hi) {
      value = std::nextafter(value, -std::numeric_limits<float>::infinity());
    }
  }
  return value;
}

}  // namespace embrec
