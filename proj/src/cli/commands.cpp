// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdlib.h>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "embrec/bench.hpp"
#include "embrec/cli.hpp"
#include "embrec/error.hpp"

namespace embrec::cli {
namespace {

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto logger = std::make_shared<spdlog::logger>("embrec", std::make_shared<spdlog::sinks::ostream_sink_mt>(err));
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("EMBREC_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    logger->set_level(spdlog::level::err);
  } else if (level == "debug") {
    logger->set_level(spdlog::level::debug);
  } else {
    logger->set_level(spdlog::level::info);
    if (level != "info") logger->warn("EMBREC_LOG={} not recognised, using info", level);
  }
  return logger;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalid:
    case ErrorKind::kRange:
    case ErrorKind::kInput:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct BuildArgs {
  std::string model_config, corpus, dtype = "f32", out;
  int layer = 0;
};

struct BenchArgs {
  std::string model_config, store, mode, json, csv;
  int k = 0, batch = 8, seq = 128, reps = kDefaultReps;
  std::size_t prefetch = 2;
  double read_delay_ms = 0.0;
};

int cmd_build(const BuildArgs& a, std::ostream& out, spdlog::logger& log) {
  const auto config = load_config(a.model_config);
  const Dtype dtype = parse_dtype(a.dtype);
  if (a.layer < 0 || a.layer > config.n_layers) {
    throw Error(ErrorKind::kRange, "--layer must be within 0.." + std::to_string(config.n_layers));
  }
  const auto records = parse_corpus(read_file(a.corpus), config);
  log.info("building {} store at {} from {} records, layer {}", a.dtype, a.out, records.size(), a.layer);
  const Model model(config);
  const auto model_id = model_id_for(config);
  auto store = DiskStore::create(a.out, dtype);
  for (const auto& rec : records) {
    const auto meta = store->put({model_id, a.layer, rec.doc_id}, forward_range(model, embed(model, rec.tokens), 0,
                                                                                 a.layer));
    log.debug("put {} ({} bytes at {}:{})", to_string(meta.key), meta.byte_len, meta.shard, meta.offset);
  }
  out << "stored " << records.size() << " entries for " << model_id << " layer " << a.layer << " in " << a.out
      << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& root, std::ostream& out) {
  const auto report = store_verify(root);
  for (const auto& bad : report.corrupted) out << "corrupt " << to_string(bad.key) << ": " << bad.reason << "\n";
  out << report.ok << "/" << report.entries << " entries ok\n";
  return report.corrupted.empty() ? kExitOk : kExitFailure;
}

int cmd_inspect(const std::string& root, const std::string& doc, std::ostream& out) {
  const auto store = DiskStore::open(root, OpenMode::kRead);
  int found = 0;
  for (const auto& meta : store->entries()) {
    if (meta.key.doc_id != doc) continue;
    ++found;
    const auto t = store->get(meta.key);
    const auto v = t.values();
    double sum = 0.0;
    for (float x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (float x : v) ss += (x - mean) * (x - mean);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    out << "key       " << to_string(meta.key) << "\n"
        << "seq_len   " << meta.seq_len << "\n"
        << "dim       " << meta.dim << "\n"
        << "dtype     " << to_string(meta.dtype) << "\n"
        << "shard     " << meta.shard << "\n"
        << "offset    " << meta.offset << "\n"
        << "byte_len  " << meta.byte_len << "\n"
        << "crc32     " << hex32(meta.crc32) << "\n"
        << "checksum  " << hex32(tensor_checksum(t)) << "\n"
        << "min       " << *lo << "\n"
        << "max       " << *hi << "\n"
        << "mean      " << mean << "\n"
        << "stdev     " << std::sqrt(ss / static_cast<double>(v.size())) << "\n";
  }
  if (found == 0) throw Error(ErrorKind::kNotFound, "no entry for document '" + doc + "' in " + root);
  return kExitOk;
}

std::unique_ptr<DiskStore> bench_store(const std::string& root, const Model& model, const std::string& model_id,
                                       int k, const std::vector<BenchDocument>& docs, spdlog::logger& log) {
  std::unique_ptr<DiskStore> store;
  try {
    store = DiskStore::open(root, OpenMode::kReadWrite);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kNotFound) {
      log.info("creating bench store at {}", root);
      store = DiskStore::create(root, Dtype::kF32);
    } else if (e.kind() == ErrorKind::kMode) {
      log.info("store is locked by a writer, benchmarking read-only");
      return DiskStore::open(root, OpenMode::kRead);
    } else {
      throw;
    }
  }
  std::vector<BenchDocument> missing;
  for (const auto& d : docs) {
    if (!store->contains({model_id, k, d.doc_id})) missing.push_back(d);
  }
  if (!missing.empty()) {
    log.info("caching layer {} for {} bench documents", k, missing.size());
    populate_cache(*store, model, model_id, k, missing);
  }
  return store;
}

int cmd_bench(const BenchArgs& a, std::ostream& out, spdlog::logger& log) {
  const auto config = load_config(a.model_config);
  const BenchMode mode = parse_bench_mode(a.mode);
  if (a.k < 0 || a.k >= config.n_layers) {
    throw Error(ErrorKind::kRange, "--k must satisfy 0 <= k < N = " + std::to_string(config.n_layers));
  }
  if (mode != BenchMode::kFull && a.store.empty()) throw Error(ErrorKind::kInvalid, "--store is required");
  if (a.read_delay_ms < 0.0) throw Error(ErrorKind::kInvalid, "--inject-read-delay-ms must be >= 0");

  const Model model(config);
  const auto model_id = model_id_for(config);
  const auto docs = make_bench_documents(config, a.batch, a.seq, config.seed);

  Scenario sc;
  sc.config = config;
  sc.k = a.k;
  sc.batch = a.batch;
  sc.seq_len = a.seq;
  sc.mode = mode;
  sc.prefetch_depth = a.prefetch;
  sc.reps = a.reps;
  sc.read_delay_ms = a.read_delay_ms;

  std::unique_ptr<DiskStore> store;
  if (mode != BenchMode::kFull) store = bench_store(a.store, model, model_id, a.k, docs, log);
  log.info("benchmarking {} at k={} over {} reps", to_string(mode), a.k, a.reps);
  const auto report = run_benchmark(sc, model, store.get(), docs, model_id);

  report_emit(report, ReportFormat::kJson, a.json);
  if (!a.csv.empty()) report_emit(report, ReportFormat::kCsv, a.csv);
  char line[256];
  std::snprintf(line, sizeof line,
                "%s k=%d/%d: baseline %.2f +- %.2f ms, variant %.2f +- %.2f ms, speedup %ld%% (theoretical %ld%%), "
                "wait %.2f ms\n",
                std::string(to_string(mode)).c_str(), a.k, config.n_layers, report.baseline.mean_ms,
                report.baseline.stdev_ms, report.variant.mean_ms, report.variant.stdev_ms,
                display_pct(report.measured_speedup_pct), display_pct(report.theoretical_speedup_pct),
                report.wait_time_ms);
  out << line;
  return kExitOk;
}

int cmd_demo(std::uint64_t seed, std::ostream& out) {
  ModelConfig config;
  config.n_layers = 6;
  config.d_model = 32;
  config.n_heads = 4;
  config.d_ff = 64;
  config.vocab_size = 256;
  config.max_seq = 64;
  config.seed = seed;
  const Model model(config);
  const auto tokens = byte_tokens("recycled activations resume the forward pass exactly");
  const auto full = full_forward(model, tokens);
  const auto model_id = model_id_for(config);
  out << "model " << model_id << " N=" << config.n_layers << " d=" << config.d_model << " seed=" << seed << "\n";
  out << "full       checksum " << hex32(tensor_checksum(full)) << "\n";

  std::string pattern = (std::filesystem::temp_directory_path() / "embrec-demo-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) throw Error(ErrorKind::kIo, "cannot create a temporary directory");
  const std::filesystem::path dir = pattern;
  bool all_equal = true;
  try {
    {
      auto writer = DiskStore::create(dir / "store", Dtype::kF32);
      const auto h0 = embed(model, tokens);
      for (int k = 0; k <= config.n_layers; ++k) writer->put({model_id, k, "demo"}, forward_range(model, h0, 0, k));
    }
    const auto reader = DiskStore::open(dir / "store");
    for (int k = 0; k <= config.n_layers; ++k) {
      const auto resumed = forward_range(model, reader->get({model_id, k, "demo"}), k, config.n_layers);
      const bool equal = bitwise_equal(resumed, full);
      all_equal = all_equal && equal;
      out << "recycled k=" << k << " checksum " << hex32(tensor_checksum(resumed)) << (equal ? " equal" : " DIFFERS")
          << "\n";
    }
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    throw;
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  return all_equal ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cache intermediate transformer activations and resume from them"};
  app.name("embrec");
  app.require_subcommand(1);

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build", "Run layers 1..k over a corpus and store h^k");
  build_cmd->add_option("--model-config", build.model_config, "Model config JSON")->required();
  build_cmd->add_option("--corpus", build.corpus, "JSON-lines corpus")->required();
  build_cmd->add_option("--layer", build.layer, "Layer k to cache")->required();
  build_cmd->add_option("--dtype", build.dtype, "f32 or f16")->required();
  build_cmd->add_option("--out", build.out, "New store directory")->required();

  std::string verify_store;
  auto* verify_cmd = app.add_subcommand("verify", "Checksum every entry of a store");
  verify_cmd->add_option("--store", verify_store, "Store directory")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the full pass against a recycling mode");
  bench_cmd->add_option("--model-config", bench.model_config, "Model config JSON")->required();
  bench_cmd->add_option("--store", bench.store, "Store directory, created and filled if missing");
  bench_cmd->add_option("--k", bench.k, "Cached layer")->required();
  bench_cmd->add_option("--mode", bench.mode, "full|recycle-ram|recycle-disk|recycle-disk-prefetch")->required();
  bench_cmd->add_option("--batch", bench.batch, "Documents per batch")->capture_default_str();
  bench_cmd->add_option("--seq", bench.seq, "Tokens per document")->capture_default_str();
  bench_cmd->add_option("--reps", bench.reps, "Timed repetitions")->capture_default_str();
  bench_cmd->add_option("--prefetch", bench.prefetch, "Prefetch depth")->capture_default_str();
  bench_cmd->add_option("--json", bench.json, "JSON report path")->required();
  bench_cmd->add_option("--csv", bench.csv, "CSV report path");
  bench_cmd->add_option("--inject-read-delay-ms", bench.read_delay_ms, "Delay added to every cache read");

  std::string inspect_store, inspect_doc;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print the entries cached for one document");
  inspect_cmd->add_option("--store", inspect_store, "Store directory")->required();
  inspect_cmd->add_option("--doc", inspect_doc, "Document id")->required();

  std::uint64_t demo_seed = 0;
  auto* demo_cmd = app.add_subcommand("demo", "Show recycled outputs matching the full pass");
  demo_cmd->add_option("--seed", demo_seed, "Model seed")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  auto log = make_logger(err);
  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == build_cmd) return cmd_build(build, out, *log);
    if (active == verify_cmd) return cmd_verify(verify_store, out);
    if (active == bench_cmd) return cmd_bench(bench, out, *log);
    if (active == inspect_cmd) return cmd_inspect(inspect_store, inspect_doc, out);
    return cmd_demo(demo_seed, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << e.what() << "\n";
    if (code == kExitUsage) err << active->help();
    return code;
  }
}

int cli_main(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace embrec::cli
