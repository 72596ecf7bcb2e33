// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic post-LN transformer encoder that can be cut at any layer:
// running layers [0, k) and then [k, N) gives exactly the same bits as
// running [0, N), which is what makes caching h^k safe.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embrec/kernels.hpp"
#include "embrec/tensor.hpp"

namespace embrec {

struct ModelConfig {
  int n_layers = 12;
  int d_model = 256;
  int n_heads = 4;
  int d_ff = 1024;
  int vocab_size = 256;
  int max_seq = 128;
  double ln_eps = 1e-5;
  std::uint64_t seed = 0;

  // Throws kConfig naming the first violated constraint.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// JSON object with exactly the field names above.
std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(std::string_view text);
ModelConfig load_config(const std::string& path);

// Weight stored as [in x out], applied as x * weight + bias.
struct Linear {
  Matrix weight;
  std::vector<float> bias;

  std::size_t in() const { return weight.rows(); }
  std::size_t out() const { return weight.cols(); }
};

struct LayerNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
};

struct LayerParams {
  Linear query;
  Linear key;
  Linear value;
  Linear attn_out;
  LayerNormParams norm1;
  Linear ff_in;
  Linear ff_out;
  LayerNormParams norm2;
};

/// Bottleneck residual module: h + ReLU(h W_down + b_down) W_up + b_up.
struct Adapter {
  Linear down;  // d x b
  Linear up;    // b x d
};

struct LayerAdapters {
  Adapter after_attention;
  Adapter after_ff;
};

/// Adapters on the contiguous layer range [first_layer, first_layer + layers.size() - 1]
/// (1-based layer indices).
struct AdapterStack {
  int bottleneck = 0;
  int first_layer = 1;
  std::vector<LayerAdapters> layers;

  const LayerAdapters* for_layer(int layer) const;
};

enum class AdapterInit {
  kIdentity,  // W_down, b_down drawn; W_up and b_up zero
  kRandom,    // every weight drawn, b_up zero
};

/// Builds adapters for layers k+1..N of `config`, drawing from a splitmix64
/// stream seeded with `seed` (down weight, down bias, then up weight per adapter).
AdapterStack make_adapters(const ModelConfig& config, int k, int bottleneck, std::uint64_t seed,
                           AdapterInit init = AdapterInit::kIdentity);

/// Two-layer ReLU MLP mapping a source model's final activations into a
/// consumer model's embedding space.
struct FusionMLP {
  Linear hidden;  // d_src x d_hidden
  Linear output;  // d_hidden x d_consumer
};

/// d_hidden defaults to d_src.
FusionMLP make_fusion_mlp(int d_src, int d_consumer, std::uint64_t seed, int d_hidden = 0);

struct ParamRef {
  std::string_view group;  // "embedding", "layer" or "adapter"
  int layer;               // 0 for embeddings, else 1-based layer index
  std::string_view name;
  std::span<const float> values;
};

class Model {
 public:
  // Parameters are drawn uniformly in [-0.05, 0.05) from one splitmix64 stream
  // seeded with config.seed: token table, position table, then per layer
  // W_Q b_Q W_K b_K W_V b_V W_O b_O W_1 b_1 W_2 b_2 (LayerNorm gamma = 1 and
  // beta = 0 are not drawn).
  explicit Model(const ModelConfig& config);
  Model(ModelConfig config, Matrix token_embedding, Matrix position_embedding, std::vector<LayerParams> layers);

  const ModelConfig& config() const { return config_; }
  const Matrix& token_embedding() const { return token_embedding_; }
  const Matrix& position_embedding() const { return position_embedding_; }
  const LayerParams& layer(int l) const { return layers_.at(static_cast<std::size_t>(l - 1)); }
  const std::vector<LayerParams>& layers() const { return layers_; }

  void attach_adapters(AdapterStack adapters);
  void detach_adapters() { adapters_.reset(); }
  const std::optional<AdapterStack>& adapters() const { return adapters_; }

  kernels::Backend backend() const { return backend_; }
  void set_backend(kernels::Backend backend) { backend_ = backend; }

  // Walks every parameter tensor in initialisation order, adapters last.
  void visit_parameters(const std::function<void(const ParamRef&)>& fn) const;

  // CRC-32 over the little-endian bytes of visit_parameters() order.
  std::uint32_t parameter_checksum() const;

 private:
  ModelConfig config_;
  Matrix token_embedding_;
  Matrix position_embedding_;
  std::vector<LayerParams> layers_;
  std::optional<AdapterStack> adapters_;
  kernels::Backend backend_ = kernels::Backend::kParallel;
};

inline Model init_model(const ModelConfig& config) { return Model(config); }

/// h^0[s] = token_embedding[tokens[s]] + position_embedding[s].
ActivationTensor embed(const Model& model, std::span<const std::int32_t> tokens);

/// One encoder layer (1-based l):
///   x' = LN(MH(h) + h), out = LN(FF(x') + x')
/// with adapters applied to the MH and FF outputs before the residual when the
/// layer is adapted.
ActivationTensor layer_forward(const Model& model, int l, const ActivationTensor& h);

/// Applies layers from_layer+1 .. to_layer. An empty range returns h unchanged.
ActivationTensor forward_range(const Model& model, const ActivationTensor& h, int from_layer, int to_layer);

ActivationTensor full_forward(const Model& model, std::span<const std::int32_t> tokens);

ActivationTensor adapter_apply(const ActivationTensor& h, const Adapter& adapter,
                               kernels::Backend backend = kernels::Backend::kParallel);

/// consumer_h0 + ReLU(source_hN W_a + b_a) W_b + b_b.
ActivationTensor cross_model_fuse(const ActivationTensor& consumer_h0, const ActivationTensor& source_hN,
                                  const FusionMLP& mlp, kernels::Backend backend = kernels::Backend::kParallel);

// ---- parameter accounting --------------------------------------------------

enum class TrainMode { kReduced, kAdapters };

struct ParameterBudget {
  std::uint64_t trainable = 0;
  std::uint64_t total = 0;
  double fraction = 0.0;
};

struct AdapterShape {
  int bottleneck;
  int first_layer;  // adapters cover first_layer..N
};

std::uint64_t embedding_parameter_count(const ModelConfig& config);
std::uint64_t layer_parameter_count(const ModelConfig& config);
/// One adapter: d*b + b + b*d + d.
std::uint64_t adapter_parameter_count(int d_model, int bottleneck);

/// Closed-form counts with the model frozen below layer k.
///   reduced:  trainable = layers k+1..N plus any adapters attached there
///   adapters: trainable = adapters on layers k+1..N only
/// total covers embeddings, all layers and all adapters.
ParameterBudget parameter_budget(const ModelConfig& config, const std::optional<AdapterShape>& adapters, int k,
                                 TrainMode mode);
ParameterBudget trainable_fraction(const Model& model, int k, TrainMode mode);

}  // namespace embrec
