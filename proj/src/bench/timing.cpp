// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "embrec/bench.hpp"
#include "embrec/error.hpp"

namespace embrec {

TimingStats stats_from_samples(std::vector<double> per_rep_ms) {
  TimingStats stats;
  stats.reps = static_cast<int>(per_rep_ms.size());
  if (per_rep_ms.empty()) return stats;
  const double n = static_cast<double>(per_rep_ms.size());
  stats.mean_ms = std::accumulate(per_rep_ms.begin(), per_rep_ms.end(), 0.0) / n;
  if (per_rep_ms.size() > 1) {
    double ss = 0.0;
    for (double v : per_rep_ms) ss += (v - stats.mean_ms) * (v - stats.mean_ms);
    stats.stdev_ms = std::sqrt(ss / (n - 1.0));
  }
  stats.per_rep_ms = std::move(per_rep_ms);
  return stats;
}

double steady_clock_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

TimingStats time_stage(const std::function<void()>& work, int reps, int warmup, const MsClock& clock) {
  if (reps < 1) throw Error(ErrorKind::kInvalid, "reps must be >= 1");
  if (warmup < 0) throw Error(ErrorKind::kInvalid, "warmup must be >= 0");
  for (int i = 0; i < warmup; ++i) work();
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const double start = clock();
    work();
    samples.push_back(clock() - start);
  }
  return stats_from_samples(std::move(samples));
}

std::pair<TimingStats, TimingStats> time_paired(const std::function<void()>& a, const std::function<void()>& b,
                                                int reps, int warmup, const MsClock& clock) {
  if (reps < 1) throw Error(ErrorKind::kInvalid, "reps must be >= 1");
  if (warmup < 0) throw Error(ErrorKind::kInvalid, "warmup must be >= 0");
  for (int i = 0; i < warmup; ++i) {
    a();
    b();
  }
  auto timed = [&](const std::function<void()>& work) {
    const double start = clock();
    work();
    return clock() - start;
  };
  std::vector<double> sa, sb;
  for (int i = 0; i < reps; ++i) {
    if (i % 2 == 0) {
      sa.push_back(timed(a));
      sb.push_back(timed(b));
    } else {
      sb.push_back(timed(b));
      sa.push_back(timed(a));
    }
  }
  return {stats_from_samples(std::move(sa)), stats_from_samples(std::move(sb))};
}

double speedup_pct(double baseline_ms, double variant_ms) {
  if (!(baseline_ms > 0.0) || !(variant_ms > 0.0) || !std::isfinite(baseline_ms) || !std::isfinite(variant_ms)) {
    throw Error(ErrorKind::kInvalid, "speedup needs positive timings");
  }
  return (baseline_ms / variant_ms - 1.0) * 100.0;
}

long display_pct(double pct) { return std::lround(pct); }

double theoretical_speedup_pct(int k, int n_layers) {
  if (n_layers < 1 || k < 0 || k >= n_layers) {
    throw Error(ErrorKind::kInvalid, "theoretical speedup needs 0 <= k < N (k=" + std::to_string(k) +
                                         ", N=" + std::to_string(n_layers) + ")");
  }
  return 100.0 * static_cast<double>(k) / static_cast<double>(n_layers - k);
}

DocumentStorage document_storage(std::uint64_t tokens, std::uint64_t window_len, std::uint64_t dim, Dtype dtype) {
  if (tokens == 0 || window_len == 0 || dim == 0) throw Error(ErrorKind::kInvalid, "storage sizes must be positive");
  DocumentStorage out;
  const std::uint64_t elem = bytes_per_element(dtype);
  out.windows = (tokens + window_len - 1) / window_len;
  out.unpadded_bytes = tokens * dim * elem;
  out.padded_bytes = out.windows * window_len * dim * elem;
  return out;
}

}  // namespace embrec
