// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace embrec {

// Dense row-major float matrix used for weights. Activations use
// ActivationTensor instead so the two never get mixed up in signatures.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  float& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Layer activations for one sequence: seq_len rows of dim values, row-major,
/// always 32-bit in compute.
class ActivationTensor {
 public:
  ActivationTensor() = default;
  /// Zero-filled tensor. Both sizes must be at least 1.
  ActivationTensor(std::size_t seq_len, std::size_t dim);
  /// Takes ownership of `data`; its length must equal seq_len * dim.
  ActivationTensor(std::size_t seq_len, std::size_t dim, std::vector<float> data);

  std::size_t seq_len() const { return seq_len_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(std::size_t s, std::size_t j) { return data_[s * dim_ + j]; }
  float at(std::size_t s, std::size_t j) const { return data_[s * dim_ + j]; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  std::span<const float> row(std::size_t s) const { return {data_.data() + s * dim_, dim_}; }

  bool all_finite() const;

 private:
  std::size_t seq_len_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

// Shape and every bit of every element match (so -0 != +0, NaN == same NaN).
bool bitwise_equal(const ActivationTensor& a, const ActivationTensor& b);

// Little-endian IEEE-754 bytes of the values, in order.
std::vector<std::uint8_t> to_le_bytes(std::span<const float> values);

// CRC-32 over to_le_bytes(t.values()).
std::uint32_t tensor_checksum(const ActivationTensor& t);

}  // namespace embrec
