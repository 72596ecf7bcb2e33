// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. Straight loops, no threading; the OpenMP versions are
// tested against these bit for bit.

#include <algorithm>
#include <cmath>
#include <vector>

#include "embrec/kernels.hpp"

namespace embrec::kernels {

float gelu_scalar(float x) {
  constexpr float kSqrt2OverPi = 0.7978845608f;
  constexpr float kCubic = 0.044715f;
  const float cube = x * x * x;
  const float inner = kSqrt2OverPi * (x + kCubic * cube);
  const auto t = static_cast<float>(std::tanh(static_cast<double>(inner)));
  return 0.5f * x * (1.0f + t);
}

namespace serial {

void linear(std::span<const float> x, std::span<const float> w, std::span<const float> bias, LinearShape shape,
            std::span<float> y) {
  for (std::size_t i = 0; i < shape.rows; ++i) {
    float* out = y.data() + i * shape.out;
    std::fill(out, out + shape.out, 0.0f);
    for (std::size_t k = 0; k < shape.in; ++k) {
      const float xv = x[i * shape.in + k];
      const float* wrow = w.data() + k * shape.out;
      for (std::size_t j = 0; j < shape.out; ++j) out[j] += xv * wrow[j];
    }
    for (std::size_t j = 0; j < shape.out; ++j) out[j] += bias[j];
  }
}

void attention(std::span<const float> q, std::span<const float> k, std::span<const float> v, std::size_t seq_len,
               std::size_t dim, std::size_t heads, std::span<float> context) {
  const std::size_t head_dim = dim / heads;
  const auto scale = static_cast<float>(std::sqrt(static_cast<double>(head_dim)));
  std::vector<float> probs(seq_len);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * head_dim;
    for (std::size_t i = 0; i < seq_len; ++i) {
      for (std::size_t j = 0; j < seq_len; ++j) {
        float dot = 0.0f;
        for (std::size_t t = 0; t < head_dim; ++t) dot += q[i * dim + off + t] * k[j * dim + off + t];
        probs[j] = dot / scale;
      }
      const float max_score = *std::max_element(probs.begin(), probs.end());
      float total = 0.0f;
      for (std::size_t j = 0; j < seq_len; ++j) {
        probs[j] = static_cast<float>(std::exp(static_cast<double>(probs[j] - max_score)));
        total += probs[j];
      }
      for (std::size_t j = 0; j < seq_len; ++j) probs[j] = probs[j] / total;

      float* out = context.data() + i * dim + off;
      std::fill(out, out + head_dim, 0.0f);
      for (std::size_t j = 0; j < seq_len; ++j) {
        const float p = probs[j];
        const float* vrow = v.data() + j * dim + off;
        for (std::size_t t = 0; t < head_dim; ++t) out[t] += p * vrow[t];
      }
    }
  }
}

void layer_norm(std::span<const float> x, std::span<const float> gamma, std::span<const float> beta,
                std::size_t rows, std::size_t dim, float eps, std::span<float> y) {
  const auto n = static_cast<float>(dim);
  for (std::size_t i = 0; i < rows; ++i) {
    const float* in = x.data() + i * dim;
    float sum = 0.0f;
    for (std::size_t j = 0; j < dim; ++j) sum += in[j];
    const float mean = sum / n;
    float var = 0.0f;
    for (std::size_t j = 0; j < dim; ++j) {
      const float c = in[j] - mean;
      var += c * c;
    }
    var = var / n;
    const auto denom = static_cast<float>(std::sqrt(static_cast<double>(var + eps)));
    float* out = y.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) out[j] = ((in[j] - mean) / denom) * gamma[j] + beta[j];
  }
}

void gelu(std::span<float> x) {
  for (float& v : x) v = gelu_scalar(v);
}

void relu(std::span<float> x) {
  for (float& v : x) v = relu_scalar(v);
}

void add(std::span<const float> a, std::span<const float> b, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}

}  // namespace serial
}  // namespace embrec::kernels
