// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

// Adapters, the cross-model fusion MLP, and parameter accounting.

#include <algorithm>
#include <string>

#include "embrec/core.hpp"
#include "embrec/error.hpp"
#include "embrec/model.hpp"

namespace embrec {
namespace {

Linear drawn(Rng& rng, std::size_t in, std::size_t out) {
  Linear lin{Matrix(in, out), std::vector<float>(out)};
  for (float& v : lin.weight.values()) v = rng.uniform(-0.05, 0.05);
  for (float& v : lin.bias) v = rng.uniform(-0.05, 0.05);
  return lin;
}

Adapter make_adapter(Rng& rng, std::size_t d, std::size_t b, AdapterInit init) {
  Adapter a;
  a.down = drawn(rng, d, b);
  a.up = Linear{Matrix(b, d), std::vector<float>(d, 0.0f)};
  if (init == AdapterInit::kRandom) {
    for (float& v : a.up.weight.values()) v = rng.uniform(-0.05, 0.05);
  }
  return a;
}

}  // namespace

AdapterStack make_adapters(const ModelConfig& config, int k, int bottleneck, std::uint64_t seed, AdapterInit init) {
  config.validate();
  if (k < 0 || k > config.n_layers) {
    throw Error(ErrorKind::kRange, "adapter split k=" + std::to_string(k) + " outside 0.." +
                                       std::to_string(config.n_layers));
  }
  if (bottleneck < 1) throw Error(ErrorKind::kConfig, "adapter bottleneck must be >= 1");
  const auto d = static_cast<std::size_t>(config.d_model);
  const auto b = static_cast<std::size_t>(bottleneck);
  Rng rng(seed);
  AdapterStack stack;
  stack.bottleneck = bottleneck;
  stack.first_layer = k + 1;
  for (int l = k + 1; l <= config.n_layers; ++l) {
    LayerAdapters la;
    la.after_attention = make_adapter(rng, d, b, init);
    la.after_ff = make_adapter(rng, d, b, init);
    stack.layers.push_back(std::move(la));
  }
  return stack;
}

FusionMLP make_fusion_mlp(int d_src, int d_consumer, std::uint64_t seed, int d_hidden) {
  if (d_hidden == 0) d_hidden = d_src;
  if (d_src < 1 || d_consumer < 1 || d_hidden < 1) {
    throw Error(ErrorKind::kConfig, "fusion MLP widths must be >= 1");
  }
  Rng rng(seed);
  FusionMLP mlp;
  mlp.hidden = drawn(rng, static_cast<std::size_t>(d_src), static_cast<std::size_t>(d_hidden));
  mlp.output = drawn(rng, static_cast<std::size_t>(d_hidden), static_cast<std::size_t>(d_consumer));
  return mlp;
}

std::uint64_t embedding_parameter_count(const ModelConfig& c) {
  const auto d = static_cast<std::uint64_t>(c.d_model);
  return (static_cast<std::uint64_t>(c.vocab_size) + static_cast<std::uint64_t>(c.max_seq)) * d;
}

std::uint64_t layer_parameter_count(const ModelConfig& c) {
  const auto d = static_cast<std::uint64_t>(c.d_model);
  const auto f = static_cast<std::uint64_t>(c.d_ff);
  const std::uint64_t attention = 4 * (d * d + d);
  const std::uint64_t norms = 2 * (2 * d);
  const std::uint64_t ff = (d * f + f) + (f * d + d);
  return attention + norms + ff;
}

std::uint64_t adapter_parameter_count(int d_model, int bottleneck) {
  const auto d = static_cast<std::uint64_t>(d_model);
  const auto b = static_cast<std::uint64_t>(bottleneck);
  return d * b + b + b * d + d;
}

ParameterBudget parameter_budget(const ModelConfig& config, const std::optional<AdapterShape>& adapters, int k,
                                 TrainMode mode) {
  const int n = config.n_layers;
  if (k < 0 || k > n) {
    throw Error(ErrorKind::kRange, "cached layer k=" + std::to_string(k) + " outside 0.." + std::to_string(n));
  }
  const std::uint64_t per_layer = layer_parameter_count(config);
  std::uint64_t per_layer_adapters = 0;
  int first_adapted = n + 1;
  if (adapters) {
    per_layer_adapters = 2 * adapter_parameter_count(config.d_model, adapters->bottleneck);
    first_adapted = adapters->first_layer;
  }
  const auto adapted_in = [&](int from, int to) -> std::uint64_t {
    const int lo = std::max(from, first_adapted);
    return lo > to ? 0 : static_cast<std::uint64_t>(to - lo + 1);
  };

  ParameterBudget budget;
  budget.total = embedding_parameter_count(config) + static_cast<std::uint64_t>(n) * per_layer +
                 adapted_in(1, n) * per_layer_adapters;
  const std::uint64_t upper_adapters = adapted_in(k + 1, n) * per_layer_adapters;
  if (mode == TrainMode::kReduced) {
    budget.trainable = static_cast<std::uint64_t>(n - k) * per_layer + upper_adapters;
  } else {
    budget.trainable = upper_adapters;
  }
  budget.fraction = budget.total == 0 ? 0.0 : static_cast<double>(budget.trainable) / static_cast<double>(budget.total);
  return budget;
}

ParameterBudget trainable_fraction(const Model& model, int k, TrainMode mode) {
  std::optional<AdapterShape> shape;
  if (const auto& stack = model.adapters(); stack && !stack->layers.empty()) {
    // parameter_budget assumes adapters run to the last layer.
    const int last = stack->first_layer + static_cast<int>(stack->layers.size()) - 1;
    if (last != model.config().n_layers) {
      throw Error(ErrorKind::kRange, "adapter stack must cover the top layers for accounting");
    }
    shape = AdapterShape{stack->bottleneck, stack->first_layer};
  }
  return parameter_budget(model.config(), shape, k, mode);
}

}  // namespace embrec
