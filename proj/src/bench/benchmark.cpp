// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <memory>
#include <string>
#include <tuple>

#include "embrec/bench.hpp"
#include "embrec/error.hpp"
#include "embrec/prefetch.hpp"

namespace embrec {
namespace {

volatile float g_sink = 0.0f;

void consume(const ActivationTensor& t) { g_sink = g_sink + t.values()[0]; }

std::vector<CacheKey> keys_for(std::string_view model_id, int k, std::span<const BenchDocument> docs) {
  std::vector<CacheKey> keys;
  keys.reserve(docs.size());
  for (const auto& d : docs) keys.push_back({std::string(model_id), k, d.doc_id});
  return keys;
}

// What resuming from the cache must produce: the full pass for F32, or the
// upper layers applied to the f16-rounded h^k.
ActivationTensor expected_output(const Model& model, const BenchDocument& doc, int k, Dtype dtype) {
  if (dtype == Dtype::kF32) return full_forward(model, doc.tokens);
  const auto hk = forward_range(model, embed(model, doc.tokens), 0, k);
  const auto rounded = decode_payload(encode_payload(hk, dtype), hk.seq_len(), hk.dim(), dtype);
  return forward_range(model, rounded, k, model.config().n_layers);
}

}  // namespace

std::string_view to_string(BenchMode mode) {
  switch (mode) {
    case BenchMode::kFull: return "full";
    case BenchMode::kRecycleRam: return "recycle_ram";
    case BenchMode::kRecycleDisk: return "recycle_disk";
    case BenchMode::kRecycleDiskPrefetch: return "recycle_disk_prefetch";
  }
  return "full";
}

BenchMode parse_bench_mode(std::string_view name) {
  std::string norm(name);
  for (char& c : norm) c = c == '-' ? '_' : c;
  for (auto m : {BenchMode::kFull, BenchMode::kRecycleRam, BenchMode::kRecycleDisk, BenchMode::kRecycleDiskPrefetch}) {
    if (norm == to_string(m)) return m;
  }
  throw Error(ErrorKind::kInvalid, "unknown bench mode '" + std::string(name) + "'");
}

std::vector<BenchDocument> make_bench_documents(const ModelConfig& config, int batch, int seq_len,
                                                std::uint64_t seed) {
  if (batch < 1) throw Error(ErrorKind::kInvalid, "batch must be >= 1");
  if (seq_len < 1 || seq_len > config.max_seq) {
    throw Error(ErrorKind::kInvalid, "seq_len must be within 1.." + std::to_string(config.max_seq));
  }
  Rng rng(seed);
  std::vector<BenchDocument> docs(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "bench-%04d", i);
    docs[static_cast<std::size_t>(i)].doc_id = id;
    auto& tokens = docs[static_cast<std::size_t>(i)].tokens;
    tokens.resize(static_cast<std::size_t>(seq_len));
    for (auto& t : tokens) t = static_cast<std::int32_t>(rng.next() % static_cast<std::uint64_t>(config.vocab_size));
  }
  return docs;
}

void populate_cache(TensorStore& store, const Model& model, std::string_view model_id, int k,
                    std::span<const BenchDocument> docs) {
  for (const auto& doc : docs) {
    store.put({std::string(model_id), k, doc.doc_id}, forward_range(model, embed(model, doc.tokens), 0, k));
  }
}

std::string model_id_for(const ModelConfig& config) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "toy-%08x", crc32(config_to_json(config)));
  return buf;
}

BenchReport run_benchmark(const Scenario& sc, const Model& model, const TensorStore* store,
                          std::span<const BenchDocument> all_docs, std::string_view model_id) {
  const int n = model.config().n_layers;
  if (!(sc.config == model.config())) throw Error(ErrorKind::kConfig, "scenario config differs from the model");
  if (sc.reps < 1 || sc.warmup < 0) throw Error(ErrorKind::kInvalid, "reps must be >= 1 and warmup >= 0");
  if (sc.batch < 1 || static_cast<std::size_t>(sc.batch) > all_docs.size()) {
    throw Error(ErrorKind::kInvalid, "batch of " + std::to_string(sc.batch) + " needs that many documents, have " +
                                         std::to_string(all_docs.size()));
  }
  const bool recycle = sc.mode != BenchMode::kFull;
  if (recycle && (sc.k < 0 || sc.k >= n)) {
    throw Error(ErrorKind::kRange, "cached layer k=" + std::to_string(sc.k) + " must satisfy 0 <= k < " +
                                       std::to_string(n));
  }
  const auto docs = all_docs.first(static_cast<std::size_t>(sc.batch));
  for (const auto& d : docs) {
    if (d.tokens.size() != static_cast<std::size_t>(sc.seq_len)) {
      throw Error(ErrorKind::kInput, "document " + d.doc_id + " is not seq_len tokens long");
    }
  }

  BenchReport report;
  report.scenario = sc;
  const Dtype dtype = store ? store->dtype() : Dtype::kF32;
  report.storage.bytes_per_seq = entry_size(sc.seq_len, model.config().d_model, dtype);
  report.storage.bytes_per_token = entry_size(1, model.config().d_model, dtype);

  auto baseline_work = [&] {
    for (const auto& d : docs) consume(full_forward(model, d.tokens));
  };

  if (!recycle) {
    report.baseline = time_stage(baseline_work, sc.reps, sc.warmup);
    report.variant = report.baseline;
    report.measured_speedup_pct = 0.0;
    report.per_run_speedup_pct = 0.0;
    report.theoretical_speedup_pct = 0.0;
    return report;
  }

  if (store == nullptr) throw Error(ErrorKind::kNotFound, "recycling mode needs a populated store");
  const auto keys = keys_for(model_id, sc.k, docs);
  for (const auto& key : keys) {
    if (!store->contains(key)) throw Error(ErrorKind::kNotFound, "store has no entry " + to_string(key));
  }

  // Cache source for the variant.
  std::unique_ptr<TensorStore> owned;
  const TensorStore* source = store;
  if (sc.mode == BenchMode::kRecycleRam) {
    auto ram = std::make_unique<MemoryStore>(store->dtype());
    for (const auto& key : keys) ram->put(key, store->get(key));
    owned = std::move(ram);
    source = owned.get();
  } else if (sc.read_delay_ms > 0.0) {
    owned = std::make_unique<ThrottledStore>(
        *store, std::chrono::microseconds(static_cast<std::int64_t>(sc.read_delay_ms * 1000.0)));
    source = owned.get();
  }

  // Equivalence gate, before anything is timed.
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto resumed = forward_range(model, store->get(keys[i]), sc.k, n);
    if (!bitwise_equal(resumed, expected_output(model, docs[i], sc.k, store->dtype()))) {
      throw Error(ErrorKind::kEquivalence, "recycled output for " + docs[i].doc_id + " differs from the full pass");
    }
  }

  std::vector<double> waits;
  auto variant_work = [&] {
    double wait = 0.0;
    if (sc.mode == BenchMode::kRecycleDiskPrefetch) {
      auto it = prefetch_iter(*source, keys, sc.prefetch_depth);
      while (auto item = it.next()) consume(forward_range(model, item->tensor, sc.k, n));
      wait = it.wait_ms();
    } else {
      for (const auto& key : keys) {
        const double t0 = steady_clock_ms();
        const auto hk = source->get(key);
        wait += steady_clock_ms() - t0;
        consume(forward_range(model, hk, sc.k, n));
      }
    }
    waits.push_back(wait);
  };

  std::tie(report.baseline, report.variant) = time_paired(baseline_work, variant_work, sc.reps, sc.warmup);

  double wait_total = 0.0;
  for (std::size_t i = waits.size() - static_cast<std::size_t>(sc.reps); i < waits.size(); ++i) wait_total += waits[i];
  report.wait_time_ms = wait_total / sc.reps;

  report.measured_speedup_pct = speedup_pct(report.baseline.mean_ms, report.variant.mean_ms);
  double per_run = 0.0;
  for (int i = 0; i < sc.reps; ++i) {
    per_run += speedup_pct(report.baseline.per_rep_ms[static_cast<std::size_t>(i)],
                           report.variant.per_rep_ms[static_cast<std::size_t>(i)]);
  }
  report.per_run_speedup_pct = per_run / sc.reps;
  report.theoretical_speedup_pct = theoretical_speedup_pct(sc.k, n);
  return report;
}

}  // namespace embrec
