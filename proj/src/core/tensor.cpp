// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "embrec/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "embrec/core.hpp"
#include "embrec/error.hpp"

namespace embrec {

ActivationTensor::ActivationTensor(std::size_t seq_len, std::size_t dim)
    : ActivationTensor(seq_len, dim, std::vector<float>(seq_len * dim, 0.0f)) {}

ActivationTensor::ActivationTensor(std::size_t seq_len, std::size_t dim, std::vector<float> data)
    : seq_len_(seq_len), dim_(dim), data_(std::move(data)) {
  if (seq_len == 0 || dim == 0) {
    throw Error(ErrorKind::kShape, "activation tensor needs seq_len >= 1 and dim >= 1");
  }
  if (data_.size() != seq_len * dim) {
    throw Error(ErrorKind::kShape, "activation data holds " + std::to_string(data_.size()) +
                                       " values, expected " + std::to_string(seq_len * dim));
  }
}

bool ActivationTensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool bitwise_equal(const ActivationTensor& a, const ActivationTensor& b) {
  if (a.seq_len() != b.seq_len() || a.dim() != b.dim()) return false;
  return a.size() == 0 || std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

std::vector<std::uint8_t> to_le_bytes(std::span<const float> values) {
  std::vector<std::uint8_t> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    out[4 * i + 0] = static_cast<std::uint8_t>(bits);
    out[4 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
    out[4 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
    out[4 * i + 3] = static_cast<std::uint8_t>(bits >> 24);
  }
  return out;
}

std::uint32_t tensor_checksum(const ActivationTensor& t) { return crc32(to_le_bytes(t.values())); }

}  // namespace embrec
