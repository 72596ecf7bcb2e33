// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

// OpenMP kernels. Work is split over independent output rows (heads x rows for
// attention); inside a row the loops match serial.cpp exactly.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "embrec/kernels.hpp"

namespace embrec::kernels::parallel {
namespace {

// Column tile for linear(): keeps a slab of the output row and the matching
// weight columns hot while k sweeps. Per-element order is still k ascending.
constexpr std::size_t kColumnTile = 256;

}  // namespace

void linear(std::span<const float> x, std::span<const float> w, std::span<const float> bias, LinearShape shape,
            std::span<float> y) {
  const auto rows = static_cast<std::int64_t>(shape.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    // Locals, not shared captures, so the inner loop vectorizes.
    const std::size_t n_in = shape.in;
    const std::size_t n_out = shape.out;
    const float* __restrict wp = w.data();
    const float* __restrict bp = bias.data();
    const float* __restrict in = x.data() + static_cast<std::size_t>(i) * n_in;
    float* __restrict out = y.data() + static_cast<std::size_t>(i) * n_out;
    for (std::size_t j0 = 0; j0 < n_out; j0 += kColumnTile) {
      const std::size_t j1 = std::min(j0 + kColumnTile, n_out);
      std::fill(out + j0, out + j1, 0.0f);
      for (std::size_t k = 0; k < n_in; ++k) {
        const float xv = in[k];
        const float* __restrict wrow = wp + k * n_out;
        for (std::size_t j = j0; j < j1; ++j) out[j] += xv * wrow[j];
      }
      for (std::size_t j = j0; j < j1; ++j) out[j] += bp[j];
    }
  }
}

void attention(std::span<const float> q, std::span<const float> k, std::span<const float> v, std::size_t seq_len,
               std::size_t dim, std::size_t heads, std::span<float> context) {
  const std::size_t head_dim = dim / heads;
  const auto scale = static_cast<float>(std::sqrt(static_cast<double>(head_dim)));
  const auto work = static_cast<std::int64_t>(heads * seq_len);
#pragma omp parallel
  {
    std::vector<float> probs(seq_len);
#pragma omp for schedule(static)
    for (std::int64_t item = 0; item < work; ++item) {
      const std::size_t h = static_cast<std::size_t>(item) / seq_len;
      const std::size_t i = static_cast<std::size_t>(item) % seq_len;
      const std::size_t off = h * head_dim;
      const float* qrow = q.data() + i * dim + off;
      for (std::size_t j = 0; j < seq_len; ++j) {
        const float* krow = k.data() + j * dim + off;
        float dot = 0.0f;
        for (std::size_t t = 0; t < head_dim; ++t) dot += qrow[t] * krow[t];
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
  const auto count = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
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
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) x[i] = gelu_scalar(x[i]);
}

void relu(std::span<float> x) {
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) x[i] = relu_scalar(x[i]);
}

void add(std::span<const float> a, std::span<const float> b, std::span<float> out) {
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

}  // namespace embrec::kernels::parallel
