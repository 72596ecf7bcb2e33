// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "embrec/model.hpp"

#include <string>
#include <utility>

#include "embrec/core.hpp"
#include "embrec/error.hpp"

namespace embrec {
namespace {

constexpr double kInitLo = -0.05;
constexpr double kInitHi = 0.05;

void fill_uniform(Rng& rng, std::span<float> values) {
  for (float& v : values) v = rng.uniform(kInitLo, kInitHi);
}

Linear draw_linear(Rng& rng, std::size_t in, std::size_t out) {
  Linear lin{Matrix(in, out), std::vector<float>(out)};
  fill_uniform(rng, lin.weight.values());
  fill_uniform(rng, lin.bias);
  return lin;
}

LayerNormParams unit_norm(std::size_t d) { return {std::vector<float>(d, 1.0f), std::vector<float>(d, 0.0f)}; }

void check_linear(const Linear& lin, std::size_t in, std::size_t out, const char* what) {
  if (lin.in() != in || lin.out() != out || lin.bias.size() != out) {
    throw Error(ErrorKind::kShape, std::string(what) + " expected " + std::to_string(in) + "x" +
                                       std::to_string(out) + ", got " + std::to_string(lin.in()) + "x" +
                                       std::to_string(lin.out()) + " with bias " + std::to_string(lin.bias.size()));
  }
}

void check_norm(const LayerNormParams& norm, std::size_t d, const char* what) {
  if (norm.gamma.size() != d || norm.beta.size() != d) {
    throw Error(ErrorKind::kShape, std::string(what) + " expects " + std::to_string(d) + " gamma/beta values");
  }
}

ActivationTensor apply_linear(kernels::Backend backend, const ActivationTensor& x, const Linear& lin) {
  ActivationTensor y(x.seq_len(), lin.out());
  kernels::linear(backend, x.values(), lin.weight.values(), lin.bias, {x.seq_len(), lin.in(), lin.out()},
                  y.values());
  return y;
}

void add_in_place(kernels::Backend backend, ActivationTensor& acc, const ActivationTensor& other) {
  kernels::add(backend, acc.values(), other.values(), acc.values());
}

ActivationTensor norm_rows(kernels::Backend backend, const ActivationTensor& x, const LayerNormParams& norm,
                           float eps) {
  ActivationTensor y(x.seq_len(), x.dim());
  kernels::layer_norm(backend, x.values(), norm.gamma, norm.beta, x.seq_len(), x.dim(), eps, y.values());
  return y;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfig, msg); };
  if (n_layers < 1) fail("n_layers must be >= 1");
  if (d_model < 2) fail("d_model must be >= 2");
  if (n_heads < 1) fail("n_heads must be >= 1");
  if (d_model % n_heads != 0) {
    fail("d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
  }
  if (d_ff < 1) fail("d_ff must be >= 1");
  if (vocab_size < 2) fail("vocab_size must be >= 2");
  if (max_seq < 1) fail("max_seq must be >= 1");
  if (!(ln_eps > 0.0)) fail("ln_eps must be > 0");
}

const LayerAdapters* AdapterStack::for_layer(int layer) const {
  const int idx = layer - first_layer;
  if (idx < 0 || idx >= static_cast<int>(layers.size())) return nullptr;
  return &layers[static_cast<std::size_t>(idx)];
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  const auto d = static_cast<std::size_t>(config_.d_model);
  const auto d_ff = static_cast<std::size_t>(config_.d_ff);
  Rng rng(config_.seed);

  token_embedding_ = Matrix(static_cast<std::size_t>(config_.vocab_size), d);
  fill_uniform(rng, token_embedding_.values());
  position_embedding_ = Matrix(static_cast<std::size_t>(config_.max_seq), d);
  fill_uniform(rng, position_embedding_.values());

  layers_.reserve(static_cast<std::size_t>(config_.n_layers));
  for (int l = 0; l < config_.n_layers; ++l) {
    LayerParams p;
    p.query = draw_linear(rng, d, d);
    p.key = draw_linear(rng, d, d);
    p.value = draw_linear(rng, d, d);
    p.attn_out = draw_linear(rng, d, d);
    p.norm1 = unit_norm(d);
    p.ff_in = draw_linear(rng, d, d_ff);
    p.ff_out = draw_linear(rng, d_ff, d);
    p.norm2 = unit_norm(d);
    layers_.push_back(std::move(p));
  }
}

Model::Model(ModelConfig config, Matrix token_embedding, Matrix position_embedding, std::vector<LayerParams> layers)
    : config_(config),
      token_embedding_(std::move(token_embedding)),
      position_embedding_(std::move(position_embedding)),
      layers_(std::move(layers)) {
  config_.validate();
  const auto d = static_cast<std::size_t>(config_.d_model);
  const auto d_ff = static_cast<std::size_t>(config_.d_ff);
  if (token_embedding_.rows() != static_cast<std::size_t>(config_.vocab_size) || token_embedding_.cols() != d) {
    throw Error(ErrorKind::kShape, "token embedding must be vocab_size x d_model");
  }
  if (position_embedding_.rows() != static_cast<std::size_t>(config_.max_seq) || position_embedding_.cols() != d) {
    throw Error(ErrorKind::kShape, "position embedding must be max_seq x d_model");
  }
  if (layers_.size() != static_cast<std::size_t>(config_.n_layers)) {
    throw Error(ErrorKind::kShape, "expected " + std::to_string(config_.n_layers) + " layers");
  }
  for (const LayerParams& p : layers_) {
    check_linear(p.query, d, d, "W_Q");
    check_linear(p.key, d, d, "W_K");
    check_linear(p.value, d, d, "W_V");
    check_linear(p.attn_out, d, d, "W_O");
    check_linear(p.ff_in, d, d_ff, "W_1");
    check_linear(p.ff_out, d_ff, d, "W_2");
    check_norm(p.norm1, d, "first LayerNorm");
    check_norm(p.norm2, d, "second LayerNorm");
  }
}

void Model::attach_adapters(AdapterStack adapters) {
  const auto d = static_cast<std::size_t>(config_.d_model);
  const auto b = static_cast<std::size_t>(adapters.bottleneck);
  if (adapters.bottleneck < 1) throw Error(ErrorKind::kConfig, "adapter bottleneck must be >= 1");
  const int last = adapters.first_layer + static_cast<int>(adapters.layers.size()) - 1;
  if (adapters.first_layer < 1 || last > config_.n_layers) {
    throw Error(ErrorKind::kRange, "adapted layers must lie within 1.." + std::to_string(config_.n_layers));
  }
  for (const LayerAdapters& la : adapters.layers) {
    for (const Adapter* a : {&la.after_attention, &la.after_ff}) {
      check_linear(a->down, d, b, "adapter W_down");
      check_linear(a->up, b, d, "adapter W_up");
    }
  }
  adapters_ = std::move(adapters);
}

void Model::visit_parameters(const std::function<void(const ParamRef&)>& fn) const {
  fn({"embedding", 0, "token_embedding", token_embedding_.values()});
  fn({"embedding", 0, "position_embedding", position_embedding_.values()});
  int l = 1;
  for (const LayerParams& p : layers_) {
    fn({"layer", l, "W_Q", p.query.weight.values()});
    fn({"layer", l, "b_Q", p.query.bias});
    fn({"layer", l, "W_K", p.key.weight.values()});
    fn({"layer", l, "b_K", p.key.bias});
    fn({"layer", l, "W_V", p.value.weight.values()});
    fn({"layer", l, "b_V", p.value.bias});
    fn({"layer", l, "W_O", p.attn_out.weight.values()});
    fn({"layer", l, "b_O", p.attn_out.bias});
    fn({"layer", l, "gamma_1", p.norm1.gamma});
    fn({"layer", l, "beta_1", p.norm1.beta});
    fn({"layer", l, "W_1", p.ff_in.weight.values()});
    fn({"layer", l, "b_1", p.ff_in.bias});
    fn({"layer", l, "W_2", p.ff_out.weight.values()});
    fn({"layer", l, "b_2", p.ff_out.bias});
    fn({"layer", l, "gamma_2", p.norm2.gamma});
    fn({"layer", l, "beta_2", p.norm2.beta});
    ++l;
  }
  if (adapters_) {
    int al = adapters_->first_layer;
    for (const LayerAdapters& la : adapters_->layers) {
      fn({"adapter", al, "mh_W_down", la.after_attention.down.weight.values()});
      fn({"adapter", al, "mh_b_down", la.after_attention.down.bias});
      fn({"adapter", al, "mh_W_up", la.after_attention.up.weight.values()});
      fn({"adapter", al, "mh_b_up", la.after_attention.up.bias});
      fn({"adapter", al, "ff_W_down", la.after_ff.down.weight.values()});
      fn({"adapter", al, "ff_b_down", la.after_ff.down.bias});
      fn({"adapter", al, "ff_W_up", la.after_ff.up.weight.values()});
      fn({"adapter", al, "ff_b_up", la.after_ff.up.bias});
      ++al;
    }
  }
}

std::uint32_t Model::parameter_checksum() const {
  std::uint32_t crc = 0;
  visit_parameters([&](const ParamRef& p) { crc = crc32_update(crc, to_le_bytes(p.values)); });
  return crc;
}

ActivationTensor embed(const Model& model, std::span<const std::int32_t> tokens) {
  const ModelConfig& cfg = model.config();
  if (tokens.empty()) throw Error(ErrorKind::kInput, "token sequence is empty");
  if (tokens.size() > static_cast<std::size_t>(cfg.max_seq)) {
    throw Error(ErrorKind::kInput, "sequence length " + std::to_string(tokens.size()) + " exceeds max_seq " +
                                       std::to_string(cfg.max_seq));
  }
  const auto d = static_cast<std::size_t>(cfg.d_model);
  ActivationTensor h(tokens.size(), d);
  for (std::size_t s = 0; s < tokens.size(); ++s) {
    const std::int32_t id = tokens[s];
    if (id < 0 || id >= cfg.vocab_size) {
      throw Error(ErrorKind::kInput, "token id " + std::to_string(id) + " at position " + std::to_string(s) +
                                         " outside vocabulary of " + std::to_string(cfg.vocab_size));
    }
    const auto tok = model.token_embedding().row(static_cast<std::size_t>(id));
    const auto pos = model.position_embedding().row(s);
    for (std::size_t j = 0; j < d; ++j) h.at(s, j) = tok[j] + pos[j];
  }
  return h;
}

ActivationTensor adapter_apply(const ActivationTensor& h, const Adapter& adapter, kernels::Backend backend) {
  if (adapter.down.in() != h.dim() || adapter.up.out() != h.dim() || adapter.up.in() != adapter.down.out()) {
    throw Error(ErrorKind::kShape, "adapter dimensions do not match activation dim " + std::to_string(h.dim()));
  }
  ActivationTensor bottleneck = apply_linear(backend, h, adapter.down);
  kernels::relu(backend, bottleneck.values());
  ActivationTensor out = apply_linear(backend, bottleneck, adapter.up);
  // h + delta, h on the left.
  kernels::add(backend, h.values(), out.values(), out.values());
  return out;
}

ActivationTensor layer_forward(const Model& model, int l, const ActivationTensor& h) {
  const ModelConfig& cfg = model.config();
  if (l < 1 || l > cfg.n_layers) {
    throw Error(ErrorKind::kRange, "layer " + std::to_string(l) + " outside 1.." + std::to_string(cfg.n_layers));
  }
  if (h.dim() != static_cast<std::size_t>(cfg.d_model) || h.seq_len() == 0) {
    throw Error(ErrorKind::kShape, "layer input has dim " + std::to_string(h.dim()) + ", model expects " +
                                       std::to_string(cfg.d_model));
  }
  const kernels::Backend be = model.backend();
  const LayerParams& p = model.layer(l);
  const LayerAdapters* adapters = model.adapters() ? model.adapters()->for_layer(l) : nullptr;
  const auto eps = static_cast<float>(cfg.ln_eps);

  const ActivationTensor q = apply_linear(be, h, p.query);
  const ActivationTensor k = apply_linear(be, h, p.key);
  const ActivationTensor v = apply_linear(be, h, p.value);
  ActivationTensor context(h.seq_len(), h.dim());
  kernels::attention(be, q.values(), k.values(), v.values(), h.seq_len(), h.dim(),
                     static_cast<std::size_t>(cfg.n_heads), context.values());
  ActivationTensor mh = apply_linear(be, context, p.attn_out);
  if (adapters) mh = adapter_apply(mh, adapters->after_attention, be);
  add_in_place(be, mh, h);
  const ActivationTensor x1 = norm_rows(be, mh, p.norm1, eps);

  ActivationTensor inner = apply_linear(be, x1, p.ff_in);
  kernels::gelu(be, inner.values());
  ActivationTensor ff = apply_linear(be, inner, p.ff_out);
  if (adapters) ff = adapter_apply(ff, adapters->after_ff, be);
  add_in_place(be, ff, x1);
  return norm_rows(be, ff, p.norm2, eps);
}

ActivationTensor forward_range(const Model& model, const ActivationTensor& h, int from_layer, int to_layer) {
  const int n = model.config().n_layers;
  if (from_layer < 0 || from_layer > to_layer || to_layer > n) {
    throw Error(ErrorKind::kRange, "layer range (" + std::to_string(from_layer) + ", " + std::to_string(to_layer) +
                                       ") invalid for " + std::to_string(n) + " layers");
  }
  ActivationTensor out = h;
  for (int l = from_layer + 1; l <= to_layer; ++l) out = layer_forward(model, l, out);
  return out;
}

ActivationTensor full_forward(const Model& model, std::span<const std::int32_t> tokens) {
  return forward_range(model, embed(model, tokens), 0, model.config().n_layers);
}

ActivationTensor cross_model_fuse(const ActivationTensor& consumer_h0, const ActivationTensor& source_hN,
                                  const FusionMLP& mlp, kernels::Backend backend) {
  if (consumer_h0.seq_len() != source_hN.seq_len()) {
    throw Error(ErrorKind::kShape, "source and consumer sequences differ in length (" +
                                       std::to_string(source_hN.seq_len()) + " vs " +
                                       std::to_string(consumer_h0.seq_len()) + ")");
  }
  if (mlp.hidden.in() != source_hN.dim() || mlp.output.in() != mlp.hidden.out() ||
      mlp.output.out() != consumer_h0.dim() || mlp.hidden.bias.size() != mlp.hidden.out() ||
      mlp.output.bias.size() != mlp.output.out()) {
    throw Error(ErrorKind::kShape, "fusion MLP dimensions do not match source/consumer widths");
  }
  ActivationTensor hidden = apply_linear(backend, source_hN, mlp.hidden);
  kernels::relu(backend, hidden.values());
  ActivationTensor out = apply_linear(backend, hidden, mlp.output);
  kernels::add(backend, consumer_h0.values(), out.values(), out.values());
  return out;
}

}  // namespace embrec
