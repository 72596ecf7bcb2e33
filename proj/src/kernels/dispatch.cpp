// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "embrec/kernels.hpp"

namespace embrec::kernels {

std::string_view to_string(Backend backend) { return backend == Backend::kSerial ? "serial" : "parallel"; }

void linear(Backend backend, std::span<const float> x, std::span<const float> w, std::span<const float> bias,
            LinearShape shape, std::span<float> y) {
  backend == Backend::kSerial ? serial::linear(x, w, bias, shape, y) : parallel::linear(x, w, bias, shape, y);
}

void attention(Backend backend, std::span<const float> q, std::span<const float> k, std::span<const float> v,
               std::size_t seq_len, std::size_t dim, std::size_t heads, std::span<float> context) {
  backend == Backend::kSerial ? serial::attention(q, k, v, seq_len, dim, heads, context)
                              : parallel::attention(q, k, v, seq_len, dim, heads, context);
}

void layer_norm(Backend backend, std::span<const float> x, std::span<const float> gamma,
                std::span<const float> beta, std::size_t rows, std::size_t dim, float eps, std::span<float> y) {
  backend == Backend::kSerial ? serial::layer_norm(x, gamma, beta, rows, dim, eps, y)
                              : parallel::layer_norm(x, gamma, beta, rows, dim, eps, y);
}

void gelu(Backend backend, std::span<float> x) {
  backend == Backend::kSerial ? serial::gelu(x) : parallel::gelu(x);
}

void relu(Backend backend, std::span<float> x) {
  backend == Backend::kSerial ? serial::relu(x) : parallel::relu(x);
}

void add(Backend backend, std::span<const float> a, std::span<const float> b, std::span<float> out) {
  backend == Backend::kSerial ? serial::add(a, b, out) : parallel::add(a, b, out);
}

}  // namespace embrec::kernels
