// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

// Dense kernels behind the encoder layer. Two implementations share one
// contract: `serial` is the plain reference, `parallel` splits independent
// rows (or heads) across OpenMP threads. Every output element is produced by
// one thread with the same accumulation order in both, so the results are
// bitwise identical and a cached activation is valid whichever backend
// produced it.
//
// Arithmetic order, fixed for reproducibility:
//   linear:     y[i][j] = (sum_k x[i][k] * w[k][j], k ascending, from +0) + b[j]
//   attention:  score = (sum_t q*k, t ascending) / sqrt(head_dim), softmax with
//               max subtraction, exp evaluated in double, sum ascending,
//               context = sum_j p[j] * v[j], j ascending
//   layer_norm: mean and variance by ascending sums divided by dim;
//               y = ((x - mean) / sqrt(var + eps)) * gamma + beta
//   gelu:       0.5x * (1 + tanh(0.7978845608 * (x + 0.044715 x^3))),
//               tanh evaluated in double

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace embrec::kernels {

enum class Backend { kSerial, kParallel };

std::string_view to_string(Backend backend);

struct LinearShape {
  std::size_t rows;
  std::size_t in;
  std::size_t out;
};

#define EMBREC_KERNEL_DECLS                                                                           \
  void linear(std::span<const float> x, std::span<const float> w, std::span<const float> bias,      \
              LinearShape shape, std::span<float> y);                                                 \
  void attention(std::span<const float> q, std::span<const float> k, std::span<const float> v,      \
                 std::size_t seq_len, std::size_t dim, std::size_t heads, std::span<float> context); \
  void layer_norm(std::span<const float> x, std::span<const float> gamma, std::span<const float> beta, \
                  std::size_t rows, std::size_t dim, float eps, std::span<float> y);                  \
  void gelu(std::span<float> x);                                                                      \
  void relu(std::span<float> x);                                                                      \
  void add(std::span<const float> a, std::span<const float> b, std::span<float> out);

namespace serial {
EMBREC_KERNEL_DECLS
}  // namespace serial

namespace parallel {
EMBREC_KERNEL_DECLS
}  // namespace parallel

#undef EMBREC_KERNEL_DECLS

// Dispatch helpers used by the model.
void linear(Backend backend, std::span<const float> x, std::span<const float> w, std::span<const float> bias,
            LinearShape shape, std::span<float> y);
void attention(Backend backend, std::span<const float> q, std::span<const float> k, std::span<const float> v,
               std::size_t seq_len, std::size_t dim, std::size_t heads, std::span<float> context);
void layer_norm(Backend backend, std::span<const float> x, std::span<const float> gamma,
                std::span<const float> beta, std::size_t rows, std::size_t dim, float eps, std::span<float> y);
void gelu(Backend backend, std::span<float> x);
void relu(Backend backend, std::span<float> x);
void add(Backend backend, std::span<const float> a, std::span<const float> b, std::span<float> out);

// Scalar pieces shared by both backends.
float gelu_scalar(float x);
inline float relu_scalar(float x) { return x > 0.0f ? x : 0.0f; }

}  // namespace embrec::kernels
