// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <numeric>
#include <vector>

#include "embrec/core.hpp"
#include "embrec/error.hpp"
#include "embrec/model.hpp"

using namespace embrec;

namespace {

ModelConfig small_config(int n_layers = 2, int d = 8, int heads = 2, int d_ff = 16, int vocab = 32,
                         int max_seq = 16, std::uint64_t seed = 7) {
  ModelConfig c;
  c.n_layers = n_layers;
  c.d_model = d;
  c.n_heads = heads;
  c.d_ff = d_ff;
  c.vocab_size = vocab;
  c.max_seq = max_seq;
  c.ln_eps = 1e-5;
  c.seed = seed;
  return c;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an embrec::Error");
  return ErrorKind::kInvalid;
}

std::vector<std::int32_t> random_tokens(Rng& rng, std::size_t n, int vocab) {
  std::vector<std::int32_t> t(n);
  for (auto& id : t) id = static_cast<std::int32_t>(rng.next() % static_cast<std::uint64_t>(vocab));
  return t;
}

Linear make_linear(std::size_t in, std::size_t out, std::vector<float> w, std::vector<float> b) {
  Linear lin{Matrix(in, out), std::move(b)};
  std::copy(w.begin(), w.end(), lin.weight.values().begin());
  return lin;
}

ActivationTensor tensor(std::size_t s, std::size_t d, std::vector<float> v) { return {s, d, std::move(v)}; }

}  // namespace

TEST_CASE("config validation") {
  CHECK(kind_of([] { Model(small_config(2, 7, 2)); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { Model(small_config(0)); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { Model(small_config(2, 8, 2, 16, 1)); }) == ErrorKind::kConfig);
  auto c = small_config();
  c.ln_eps = 0.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::kConfig);
}

TEST_CASE("config JSON round trip and strictness") {
  auto c = small_config();
  c.seed = 0xFFFFFFFFFFFFFFFFULL;
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK(kind_of([] { config_from_json("{\"n_layers\": 2}"); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { config_from_json("not json"); }) == ErrorKind::kConfig);
  auto text = config_to_json(small_config());
  text.insert(1, "\"extra\": 1, ");
  CHECK(kind_of([&] { config_from_json(text); }) == ErrorKind::kConfig);
}

TEST_CASE("initialisation is a pure function of config and seed") {
  const Model a(small_config());
  const Model b(small_config());
  CHECK(a.parameter_checksum() == b.parameter_checksum());
  // Frozen from tests/oracle/reference.py.
  CHECK(a.parameter_checksum() == 0x1024C6F5u);
  CHECK(Model(small_config(2, 8, 2, 16, 32, 16, 8)).parameter_checksum() != a.parameter_checksum());
  CHECK(a.layer(1).norm1.gamma == std::vector<float>(8, 1.0f));
  CHECK(a.layer(2).norm2.beta == std::vector<float>(8, 0.0f));
}

TEST_CASE("embed") {
  const Model m(small_config());
  CHECK(kind_of([&] { embed(m, std::vector<std::int32_t>{}); }) == ErrorKind::kInput);
  CHECK(kind_of([&] { embed(m, std::vector<std::int32_t>{32}); }) == ErrorKind::kInput);
  CHECK(kind_of([&] { embed(m, std::vector<std::int32_t>{-1}); }) == ErrorKind::kInput);
  CHECK(kind_of([&] { embed(m, std::vector<std::int32_t>(17, 0)); }) == ErrorKind::kInput);

  const auto h = embed(m, std::vector<std::int32_t>{1, 2, 3});
  CHECK(h.seq_len() == 3);
  CHECK(h.dim() == 8);

  const auto same = embed(m, std::vector<std::int32_t>{0, 0});
  const bool pos_differ = std::memcmp(m.position_embedding().row(0).data(), m.position_embedding().row(1).data(),
                                      8 * sizeof(float)) != 0;
  const bool rows_differ = std::memcmp(same.row(0).data(), same.row(1).data(), 8 * sizeof(float)) != 0;
  CHECK(pos_differ == rows_differ);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(same.at(1, j) == m.token_embedding().at(0, j) + m.position_embedding().at(1, j));
  }
}

TEST_CASE("layer_forward on hand-set weights matches the scalar oracle") {
  // d = 3, one head, d_ff = 2. Expected values from tests/oracle/reference.py,
  // which replays the same float32 operation order.
  auto cfg = small_config(1, 3, 1, 2, 2, 2);
  LayerParams p;
  p.query = make_linear(3, 3, {0.5f, -0.25f, 0, 0.125f, 0.75f, 0.5f, 0, 0.25f, -0.5f}, {0, 0.1f, 0});
  p.key = make_linear(3, 3, {0.25f, 0.5f, 0, -0.5f, 0.25f, 0.125f, 0.5f, 0, 1}, {0.05f, 0, 0});
  p.value = make_linear(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0});
  p.attn_out = make_linear(3, 3, {0.5f, 0.5f, 0, -0.5f, 0.5f, 0.25f, 0, 0.25f, 1}, {0.1f, -0.1f, 0});
  p.norm1 = {{1, 1, 1}, {0, 0, 0}};
  p.ff_in = make_linear(3, 2, {1, -1, 0.5f, 2, 0.25f, 0}, {0, 0.25f});
  p.ff_out = make_linear(2, 3, {0.5f, -0.5f, 0.25f, 1, 0.25f, -1}, {0, 0, 0.1f});
  p.norm2 = {{1.5f, 0.5f, 1}, {0.1f, -0.2f, 0}};
  std::vector<LayerParams> layers;
  layers.push_back(p);
  Model m(cfg, Matrix(2, 3), Matrix(2, 3), layers);

  const auto h = tensor(2, 3, {1.0f, -0.5f, 0.25f, 0.25f, 2.0f, -1.0f});
  for (auto backend : {kernels::Backend::kSerial, kernels::Backend::kParallel}) {
    m.set_backend(backend);
    const auto out = layer_forward(m, 1, h);
    CHECK(out.values()[0] == 2.115062713623047f);
    CHECK(out.values()[1] == -0.7272183895111084f);
    CHECK(out.values()[2] == -0.28893858194351196f);
    CHECK(out.values()[3] == 1.4083105325698853f);
    CHECK(out.values()[4] == 0.0639854222536087f);
    CHECK(out.values()[5] == -1.4001778364181519f);
  }

  // d = 2 variant: LayerNorm over two elements pins each row near (+-1).
  auto cfg2 = small_config(1, 2, 1, 2, 2, 2);
  LayerParams p2;
  p2.query = make_linear(2, 2, {0.5f, -0.25f, 0.125f, 0.75f}, {0, 0.1f});
  p2.key = make_linear(2, 2, {0.25f, 0.5f, -0.5f, 0.25f}, {0.05f, 0});
  p2.value = make_linear(2, 2, {1, 0, 0, 1}, {0, 0});
  p2.attn_out = make_linear(2, 2, {0.5f, 0.5f, -0.5f, 0.5f}, {0.1f, -0.1f});
  p2.norm1 = {{1, 1}, {0, 0}};
  p2.ff_in = make_linear(2, 2, {1, -1, 0.5f, 2}, {0, 0.25f});
  p2.ff_out = make_linear(2, 2, {0.5f, -0.5f, 1, 0.25f}, {0, 0});
  p2.norm2 = {{1.5f, 0.5f}, {0.1f, -0.2f}};
  const Model m2(cfg2, Matrix(2, 2), Matrix(2, 2), std::vector<LayerParams>{p2});
  const auto out2 = layer_forward(m2, 1, tensor(2, 2, {1.0f, -0.5f, 0.25f, 2.0f}));
  CHECK(out2.values()[0] == 1.5999945402145386f);
  CHECK(out2.values()[1] == -0.699998140335083f);
  CHECK(out2.values()[2] == 1.599623680114746f);
  CHECK(out2.values()[3] == -0.6998741030693054f);
}

TEST_CASE("layer_forward shape and degenerate cases") {
  const Model m(small_config());
  Rng rng(1);
  const auto h = embed(m, random_tokens(rng, 5, 32));
  const auto out = layer_forward(m, 1, h);
  CHECK(out.seq_len() == 5);
  CHECK(out.dim() == 8);
  CHECK(out.all_finite());
  CHECK(kind_of([&] { layer_forward(m, 0, h); }) == ErrorKind::kRange);
  CHECK(kind_of([&] { layer_forward(m, 3, h); }) == ErrorKind::kRange);
  CHECK(kind_of([&] { layer_forward(m, 1, ActivationTensor(5, 4)); }) == ErrorKind::kShape);

  // All-zero weights: every sub-layer sees a constant row, so LN returns beta.
  auto cfg = small_config(1, 8, 2, 16, 2, 4);
  LayerParams zero;
  zero.query = zero.key = zero.value = zero.attn_out = Linear{Matrix(8, 8), std::vector<float>(8)};
  zero.ff_in = Linear{Matrix(8, 16), std::vector<float>(16)};
  zero.ff_out = Linear{Matrix(16, 8), std::vector<float>(8)};
  zero.norm1 = {std::vector<float>(8, 1.0f), std::vector<float>(8, 0.0f)};
  zero.norm2 = zero.norm1;
  const Model flat(cfg, Matrix(2, 8), Matrix(4, 8), std::vector<LayerParams>{zero});
  const auto y = layer_forward(flat, 1, ActivationTensor(3, 8, std::vector<float>(24, 0.5f)));
  for (float v : y.values()) CHECK(v == 0.0f);
}

TEST_CASE("forward_range composition is the recycling identity") {
  const Model m(small_config(6, 16, 4, 32, 50, 20, 3));
  Rng rng(17);
  const auto h0 = embed(m, random_tokens(rng, 11, 50));
  CHECK(bitwise_equal(forward_range(m, h0, 0, 0), h0));
  const auto full = forward_range(m, h0, 0, 6);
  for (int k = 0; k <= 6; ++k) {
    const auto hk = forward_range(m, h0, 0, k);
    CHECK(bitwise_equal(forward_range(m, hk, k, k), hk));
    CHECK(bitwise_equal(forward_range(m, hk, k, 6), full));
  }
  CHECK(kind_of([&] { forward_range(m, h0, 3, 2); }) == ErrorKind::kRange);
  CHECK(kind_of([&] { forward_range(m, h0, 0, 7); }) == ErrorKind::kRange);
  CHECK(kind_of([&] { forward_range(m, h0, -1, 2); }) == ErrorKind::kRange);
}

TEST_CASE("twelve-layer split at six matches the full pass") {
  Model m(small_config(12, 32, 4, 64, 100, 64, 12));
  Rng rng(12);
  const auto tokens = random_tokens(rng, 40, 100);
  const auto full = full_forward(m, tokens);
  const auto cached = forward_range(m, embed(m, tokens), 0, 6);
  CHECK(tensor_checksum(forward_range(m, cached, 6, 12)) == tensor_checksum(full));
  m.set_backend(kernels::Backend::kSerial);
  CHECK(bitwise_equal(full_forward(m, tokens), full));
}

TEST_CASE("full_forward golden checksum") {
  Model m(small_config(4, 16, 2, 32, 64, 16, 1));
  std::vector<std::int32_t> tokens(8);
  std::iota(tokens.begin(), tokens.end(), 1);
  const auto out = full_forward(m, tokens);
  // Frozen from tests/oracle/reference.py.
  CHECK(tensor_checksum(out) == 0x760FE051u);
  CHECK(bitwise_equal(out, forward_range(m, embed(m, tokens), 0, 4)));
  CHECK(bitwise_equal(out, full_forward(m, tokens)));
}

TEST_CASE("adapter_apply") {
  SUBCASE("zero up-projection is the identity") {
    Rng rng(4);
    Adapter a{make_linear(4, 2, std::vector<float>(8, 0.3f), {0.1f, -0.2f}),
              Linear{Matrix(2, 4), std::vector<float>(4, 0.0f)}};
    ActivationTensor h(3, 4);
    for (float& v : h.values()) v = rng.uniform(-2, 2);
    CHECK(bitwise_equal(adapter_apply(h, a), h));
  }
  SUBCASE("hand example d=2 b=1") {
    const Adapter a{make_linear(2, 1, {0.5f, -0.25f}, {0.1f}), make_linear(1, 2, {2.0f, -1.0f}, {0.01f, 0.02f})};
    const auto out = adapter_apply(tensor(2, 2, {1.0f, -2.0f, 0.5f, 0.25f}), a);
    CHECK(out.values()[0] == 3.2100000381469727f);
    CHECK(out.values()[1] == -3.0799999237060547f);
    CHECK(out.values()[2] == 1.0850000381469727f);
    CHECK(out.values()[3] == -0.017499983310699463f);
  }
  SUBCASE("shape mismatch") {
    const Adapter a{make_linear(2, 1, {0.5f, -0.25f}, {0.1f}), make_linear(1, 2, {2.0f, -1.0f}, {0.01f, 0.02f})};
    CHECK(kind_of([&] { adapter_apply(ActivationTensor(2, 3), a); }) == ErrorKind::kShape);
  }
}

TEST_CASE("adapters above the cache point keep recycling exact") {
  const auto cfg = small_config(6, 16, 2, 32, 40, 16, 9);
  Model plain(cfg);
  Model adapted(cfg);
  adapted.attach_adapters(make_adapters(cfg, 3, 4, 77, AdapterInit::kRandom));
  Rng rng(2);
  const auto tokens = random_tokens(rng, 9, 40);
  const auto h3 = forward_range(plain, embed(plain, tokens), 0, 3);
  CHECK(bitwise_equal(h3, forward_range(adapted, embed(adapted, tokens), 0, 3)));
  CHECK(bitwise_equal(forward_range(adapted, h3, 3, 6), full_forward(adapted, tokens)));
  CHECK_FALSE(bitwise_equal(full_forward(adapted, tokens), full_forward(plain, tokens)));

  Model identity(cfg);
  identity.attach_adapters(make_adapters(cfg, 3, 4, 77, AdapterInit::kIdentity));
  CHECK(bitwise_equal(full_forward(identity, tokens), full_forward(plain, tokens)));

  Model bad(cfg);
  auto stack = make_adapters(cfg, 3, 4, 1);
  stack.first_layer = 5;
  CHECK(kind_of([&] { bad.attach_adapters(stack); }) == ErrorKind::kRange);
}

TEST_CASE("trainable fraction counts") {
  CHECK(adapter_parameter_count(768, 256) == 394240u);
  CHECK(2 * adapter_parameter_count(768, 256) == 788480u);
  CHECK(6 * 2 * adapter_parameter_count(768, 256) == 4730880u);

  const Model m(small_config(4, 8, 2, 16, 32, 16, 1));
  const auto none = trainable_fraction(m, 4, TrainMode::kReduced);
  CHECK(none.trainable == 0);
  CHECK(none.fraction == 0.0);
  const auto all = trainable_fraction(m, 0, TrainMode::kReduced);
  CHECK(all.trainable == 4 * layer_parameter_count(m.config()));
  CHECK(kind_of([&] { trainable_fraction(m, 5, TrainMode::kReduced); }) == ErrorKind::kRange);
  CHECK(trainable_fraction(m, 2, TrainMode::kAdapters).trainable == 0);
}

TEST_CASE("closed-form counts equal exhaustive enumeration") {
  Rng rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const int heads = 1 + static_cast<int>(rng.next() % 3);
    auto cfg = small_config(1 + static_cast<int>(rng.next() % 5), heads * (2 + static_cast<int>(rng.next() % 5)),
                            heads, 1 + static_cast<int>(rng.next() % 20), 2 + static_cast<int>(rng.next() % 30),
                            1 + static_cast<int>(rng.next() % 10), rng.next());
    Model m(cfg);
    const int k = static_cast<int>(rng.next() % static_cast<std::uint64_t>(cfg.n_layers + 1));
    const bool with_adapters = trial % 2 == 1;
    if (with_adapters) {
      const int adapter_k = static_cast<int>(rng.next() % static_cast<std::uint64_t>(cfg.n_layers + 1));
      m.attach_adapters(make_adapters(cfg, adapter_k, 1 + static_cast<int>(rng.next() % 5), rng.next()));
    }
    std::uint64_t total = 0, reduced = 0, adapters_only = 0;
    m.visit_parameters([&](const ParamRef& p) {
      total += p.values.size();
      const bool upper = p.layer > k;
      if (p.group == "layer" && upper) reduced += p.values.size();
      if (p.group == "adapter" && upper) {
        reduced += p.values.size();
        adapters_only += p.values.size();
      }
    });
    const auto r = trainable_fraction(m, k, TrainMode::kReduced);
    const auto a = trainable_fraction(m, k, TrainMode::kAdapters);
    REQUIRE(r.total == total);
    REQUIRE(r.trainable == reduced);
    REQUIRE(a.total == total);
    REQUIRE(a.trainable == adapters_only);
  }
}

TEST_CASE("BERT-base shaped adapter budget") {
  ModelConfig bert;
  bert.n_layers = 12;
  bert.d_model = 768;
  bert.n_heads = 12;
  bert.d_ff = 3072;
  bert.vocab_size = 30522;
  bert.max_seq = 512;
  const auto budget = parameter_budget(bert, AdapterShape{256, 7}, 6, TrainMode::kAdapters);
  CHECK(budget.trainable == 4730880u);
  // Embeddings (30522 + 512) x 768 plus 12 layers of 7,087,872 plus adapters.
  CHECK(embedding_parameter_count(bert) == 23834112u);
  CHECK(layer_parameter_count(bert) == 7087872u);
  CHECK(budget.total == 23834112u + 12u * 7087872u + 4730880u);
  MESSAGE("BERT-base adapters on layers 7-12, b=256: " << budget.trainable << " / " << budget.total << " = "
                                                        << budget.fraction * 100.0 << "%");
}

TEST_CASE("cross_model_fuse") {
  SUBCASE("zero MLP leaves the consumer embedding untouched") {
    FusionMLP zero{Linear{Matrix(4, 4), std::vector<float>(4)}, Linear{Matrix(4, 2), std::vector<float>(2)}};
    const auto consumer = tensor(2, 2, {0.3f, -0.7f, 1.5f, 2.5f});
    const auto out = cross_model_fuse(consumer, ActivationTensor(2, 4, std::vector<float>(8, 1.0f)), zero);
    CHECK(bitwise_equal(out, consumer));
  }
  SUBCASE("hand example d_src=4 d_consumer=2") {
    FusionMLP mlp{make_linear(4, 4, {0.5f, 0, -0.5f, 0.25f, 0.25f, 1, 0, 0, 0, 0.5f, 1, -1, 0.125f, 0, 0.25f, 0.5f},
                              {0, 0.1f, -0.1f, 0}),
                  make_linear(4, 2, {1, 0, 0, 1, 0.5f, 0.5f, -1, 2}, {0.05f, -0.05f})};
    const auto out = cross_model_fuse(tensor(1, 2, {0.3f, -0.7f}), tensor(1, 4, {1, -1, 0.5f, 2}), mlp);
    CHECK(out.values()[0] == 0.30000001192092896f);
    CHECK(out.values()[1] == 0.9500001072883606f);
  }
  SUBCASE("length and width mismatches") {
    const auto mlp = make_fusion_mlp(4, 2, 1);
    CHECK(mlp.hidden.out() == 4);
    CHECK(kind_of([&] { cross_model_fuse(ActivationTensor(3, 2), ActivationTensor(4, 4), mlp); }) ==
          ErrorKind::kShape);
    CHECK(kind_of([&] { cross_model_fuse(ActivationTensor(3, 2), ActivationTensor(3, 5), mlp); }) ==
          ErrorKind::kShape);
  }
  SUBCASE("source final layer feeding a narrower consumer") {
    const Model source(small_config(2, 16, 2, 32, 40, 16, 5));
    const Model consumer(small_config(2, 8, 2, 16, 40, 16, 6));
    Rng rng(6);
    const auto tokens = random_tokens(rng, 7, 40);
    const auto fused = cross_model_fuse(embed(consumer, tokens), full_forward(source, tokens),
                                        make_fusion_mlp(16, 8, 3));
    const auto out = forward_range(consumer, fused, 0, 2);
    CHECK(out.seq_len() == 7);
    CHECK(out.dim() == 8);
    CHECK(out.all_finite());
  }
}
