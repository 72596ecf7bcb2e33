// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

// Timing harness and the speedup/storage arithmetic for recycled inference.
//
// Speedup is (t_baseline / t_variant - 1) * 100, so halving the work reads as
// 100%. Under a uniform per-layer cost, caching layer k of N caps it at
// k / (N - k) * 100.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "embrec/model.hpp"
#include "embrec/store.hpp"

namespace embrec {

struct TimingStats {
  double mean_ms = 0.0;
  double stdev_ms = 0.0;  // sample standard deviation (n - 1)
  int reps = 0;
  std::vector<double> per_rep_ms;

  bool operator==(const TimingStats&) const = default;
};

TimingStats stats_from_samples(std::vector<double> per_rep_ms);

inline constexpr int kDefaultReps = 7;
inline constexpr int kDefaultWarmup = 2;

// Monotonic milliseconds; replaceable in tests.
using MsClock = std::function<double()>;
double steady_clock_ms();

/// Runs `work` warmup times untimed, then reps timed runs.
TimingStats time_stage(const std::function<void()>& work, int reps = kDefaultReps, int warmup = kDefaultWarmup,
                       const MsClock& clock = steady_clock_ms);

/// Times two stages with their reps interleaved A B B A A B ..., so slow drift
/// in machine speed lands on both alike. Rep i of each forms pair i.
std::pair<TimingStats, TimingStats> time_paired(const std::function<void()>& a, const std::function<void()>& b,
                                                int reps = kDefaultReps, int warmup = kDefaultWarmup,
                                                const MsClock& clock = steady_clock_ms);

double speedup_pct(double baseline_ms, double variant_ms);
// Rounded to the nearest integer percent, as shown in tables.
long display_pct(double pct);
double theoretical_speedup_pct(int k, int n_layers);

enum class BenchMode { kFull, kRecycleRam, kRecycleDisk, kRecycleDiskPrefetch };

std::string_view to_string(BenchMode mode);
// Accepts both "recycle_ram" and "recycle-ram" spellings.
BenchMode parse_bench_mode(std::string_view name);

struct Scenario {
  ModelConfig config;
  int k = 0;
  int batch = 8;
  int seq_len = 128;
  BenchMode mode = BenchMode::kFull;
  std::size_t prefetch_depth = 0;
  int reps = kDefaultReps;
  int warmup = kDefaultWarmup;
  double read_delay_ms = 0.0;  // injected per cache read (disk modes only)

  bool operator==(const Scenario&) const = default;
};

struct StorageCost {
  std::uint64_t bytes_per_seq = 0;
  std::uint64_t bytes_per_token = 0;

  bool operator==(const StorageCost&) const = default;
};

struct BenchReport {
  Scenario scenario;
  TimingStats baseline;
  TimingStats variant;
  double measured_speedup_pct = 0.0;  // from the ratio of means
  double per_run_speedup_pct = 0.0;   // mean of per-rep speedups
  double theoretical_speedup_pct = 0.0;
  double wait_time_ms = 0.0;  // mean per-rep time blocked on cache loads
  StorageCost storage;

  bool operator==(const BenchReport&) const = default;
};

struct BenchDocument {
  std::string doc_id;
  std::vector<std::int32_t> tokens;
};

/// `batch` documents of `seq_len` random token ids, ids "bench-0000"...
std::vector<BenchDocument> make_bench_documents(const ModelConfig& config, int batch, int seq_len,
                                                std::uint64_t seed);

/// Caches h^k of every document under (model_id, k, doc_id).
void populate_cache(TensorStore& store, const Model& model, std::string_view model_id, int k,
                    std::span<const BenchDocument> docs);

/// Stable id for a toy model: "toy-" + CRC-32 of its config JSON.
std::string model_id_for(const ModelConfig& config);

/// Times the full forward pass against the chosen recycling mode over the
/// first scenario.batch documents. Before any timing the variant's outputs
/// are checked bit for bit against the recomputed reference (for F16 stores
/// the reference resumes from the f16-rounded h^k); a mismatch raises
/// kEquivalence. Missing cache entries raise kNotFound.
BenchReport run_benchmark(const Scenario& scenario, const Model& model, const TensorStore* store,
                          std::span<const BenchDocument> docs, std::string_view model_id);

// Report files. JSON: one object with the BenchReport field names. CSV: the
// fixed header below, one row per report.
enum class ReportFormat { kJson, kCsv };
ReportFormat parse_report_format(std::string_view name);

inline constexpr std::string_view kCsvHeader =
    "mode,N,k,d_model,batch,seq_len,baseline_mean_ms,baseline_stdev_ms,variant_mean_ms,variant_stdev_ms,"
    "speedup_pct,theoretical_pct,wait_ms,bytes_per_seq";

std::string report_to_json(const BenchReport& report);
BenchReport report_from_json(std::string_view text);
std::string reports_to_csv(std::span<const BenchReport> reports);

void report_emit(const BenchReport& report, ReportFormat format, const std::filesystem::path& path);
void report_emit(std::span<const BenchReport> reports, ReportFormat format, const std::filesystem::path& path);

// ---- storage accounting for whole documents -------------------------------

struct DocumentStorage {
  std::uint64_t unpadded_bytes = 0;  // tokens * dim * element size
  std::uint64_t padded_bytes = 0;    // every window padded to window_len
  std::uint64_t windows = 0;
};

DocumentStorage document_storage(std::uint64_t tokens, std::uint64_t window_len, std::uint64_t dim, Dtype dtype);

}  // namespace embrec
