// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "embrec/bench.hpp"
#include "embrec/error.hpp"
#include "test_support.hpp"

using namespace embrec;
using embrec::testing::TempDir;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.n_layers = 4;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.vocab_size = 64;
  c.max_seq = 16;
  c.seed = 3;
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

Scenario tiny_scenario(BenchMode mode, int k) {
  Scenario sc;
  sc.config = tiny_config();
  sc.k = k;
  sc.batch = 3;
  sc.seq_len = 8;
  sc.mode = mode;
  sc.reps = 3;
  sc.warmup = 1;
  sc.prefetch_depth = 2;
  return sc;
}

}  // namespace

TEST_CASE("timing stats use the sample standard deviation") {
  const auto s = stats_from_samples({1.0, 2.0, 3.0});
  CHECK(s.mean_ms == doctest::Approx(2.0));
  CHECK(s.stdev_ms == doctest::Approx(1.0));
  CHECK(s.reps == 3);
  CHECK(stats_from_samples({5.0}).stdev_ms == 0.0);
}

TEST_CASE("time_stage skips warmup and reads the clock around each rep") {
  std::vector<double> ticks = {0.0, 1.0, 1.0, 3.0, 3.0, 6.0};
  std::size_t next = 0;
  int calls = 0;
  const auto s = time_stage([&] { ++calls; }, 3, 2, [&] { return ticks.at(next++); });
  CHECK(calls == 5);
  CHECK(next == 6);
  CHECK(s.per_rep_ms == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(s.mean_ms == doctest::Approx(2.0));
  CHECK(s.stdev_ms == doctest::Approx(1.0));
  CHECK(kind_of([] { time_stage([] {}, 0); }) == ErrorKind::kInvalid);
}

TEST_CASE("speedup percentages") {
  CHECK(display_pct(speedup_pct(647.0, 351.0)) == 84);
  CHECK(display_pct(speedup_pct(416.0, 269.0)) == 55);
  CHECK(speedup_pct(10.0, 10.0) == 0.0);
  CHECK(speedup_pct(10.0, 5.0) == doctest::Approx(100.0));
  CHECK(kind_of([] { speedup_pct(1.0, 0.0); }) == ErrorKind::kInvalid);
  CHECK(kind_of([] { speedup_pct(-1.0, 2.0); }) == ErrorKind::kInvalid);

  CHECK(theoretical_speedup_pct(6, 12) == doctest::Approx(100.0));
  CHECK(theoretical_speedup_pct(0, 12) == 0.0);
  CHECK(theoretical_speedup_pct(8, 12) == doctest::Approx(200.0));
  CHECK(theoretical_speedup_pct(9, 12) == doctest::Approx(300.0));
  CHECK(kind_of([] { theoretical_speedup_pct(12, 12); }) == ErrorKind::kInvalid);
  CHECK(kind_of([] { theoretical_speedup_pct(-1, 12); }) == ErrorKind::kInvalid);
}

TEST_CASE("uniform layer cost gives exactly the theoretical speedup") {
  for (int n = 2; n <= 48; ++n) {
    double prev = -1.0;
    for (int k = 1; k < n; ++k) {
      const double unit = 0.37;
      const double measured = speedup_pct(unit * n, unit * (n - k));
      const double theory = theoretical_speedup_pct(k, n);
      CHECK(std::abs(measured - theory) <= 1e-9 * std::max(1.0, theory));
      CHECK(theory > prev);
      prev = theory;
    }
  }
}

TEST_CASE("bench mode names") {
  CHECK(parse_bench_mode("recycle_disk_prefetch") == BenchMode::kRecycleDiskPrefetch);
  CHECK(parse_bench_mode("recycle-ram") == BenchMode::kRecycleRam);
  CHECK(to_string(BenchMode::kFull) == "full");
  CHECK(kind_of([] { parse_bench_mode("turbo"); }) == ErrorKind::kInvalid);
}

TEST_CASE("document storage padded versus unpadded") {
  const auto s = document_storage(4884, 512, 768, Dtype::kF32);
  CHECK(s.windows == 10);
  CHECK(s.unpadded_bytes == 15003648);
  CHECK(s.padded_bytes == 15728640);
  const auto h = document_storage(512, 512, 768, Dtype::kF16);
  CHECK(h.windows == 1);
  CHECK(h.padded_bytes == h.unpadded_bytes);
  CHECK(kind_of([] { document_storage(0, 512, 768, Dtype::kF32); }) == ErrorKind::kInvalid);
}

TEST_CASE("bench documents are deterministic") {
  const auto a = make_bench_documents(tiny_config(), 3, 8, 11);
  const auto b = make_bench_documents(tiny_config(), 3, 8, 11);
  REQUIRE(a.size() == 3);
  CHECK(a[0].doc_id == "bench-0000");
  CHECK(a[2].doc_id == "bench-0002");
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tokens == b[i].tokens);
  for (auto t : a[1].tokens) CHECK((t >= 0 && t < 64));
  CHECK(kind_of([] { make_bench_documents(tiny_config(), 1, 17, 0); }) == ErrorKind::kInvalid);
}

TEST_CASE("run_benchmark over every mode") {
  const Model model(tiny_config());
  const auto docs = make_bench_documents(tiny_config(), 3, 8, 5);
  const auto id = model_id_for(tiny_config());
  CHECK(id.rfind("toy-", 0) == 0);
  CHECK(id.size() == 12);

  TempDir dir;
  auto store = DiskStore::create(dir / "store", Dtype::kF32);
  populate_cache(*store, model, id, 2, docs);

  SUBCASE("full mode reports zero") {
    const auto r = run_benchmark(tiny_scenario(BenchMode::kFull, 0), model, nullptr, docs, id);
    CHECK(r.measured_speedup_pct == 0.0);
    CHECK(r.theoretical_speedup_pct == 0.0);
    CHECK(r.baseline.reps == 3);
    CHECK(r.variant == r.baseline);
  }
  for (auto mode : {BenchMode::kRecycleRam, BenchMode::kRecycleDisk, BenchMode::kRecycleDiskPrefetch}) {
    CAPTURE(to_string(mode));
    const auto r = run_benchmark(tiny_scenario(mode, 2), model, store.get(), docs, id);
    CHECK(r.theoretical_speedup_pct == doctest::Approx(100.0));
    CHECK(r.variant.reps == 3);
    CHECK(r.variant.per_rep_ms.size() == 3);
    CHECK(r.storage.bytes_per_seq == 8 * 16 * 4);
    CHECK(r.storage.bytes_per_token == 16 * 4);
    CHECK(r.wait_time_ms >= 0.0);
    CHECK(std::isfinite(r.measured_speedup_pct));
  }

  SUBCASE("injected read delay shows up as wait time") {
    auto sc = tiny_scenario(BenchMode::kRecycleDisk, 2);
    sc.read_delay_ms = 5.0;
    const auto r = run_benchmark(sc, model, store.get(), docs, id);
    CHECK(r.wait_time_ms >= 3 * 5.0 * 0.9);
  }
  SUBCASE("missing entries") {
    CHECK(kind_of([&] { run_benchmark(tiny_scenario(BenchMode::kRecycleDisk, 1), model, store.get(), docs, id); }) ==
          ErrorKind::kNotFound);
    CHECK(kind_of([&] { run_benchmark(tiny_scenario(BenchMode::kRecycleRam, 2), model, nullptr, docs, id); }) ==
          ErrorKind::kNotFound);
  }
  SUBCASE("bad scenarios") {
    CHECK(kind_of([&] { run_benchmark(tiny_scenario(BenchMode::kRecycleDisk, 4), model, store.get(), docs, id); }) ==
          ErrorKind::kRange);
    auto sc = tiny_scenario(BenchMode::kRecycleDisk, 2);
    sc.batch = 4;
    CHECK(kind_of([&] { run_benchmark(sc, model, store.get(), docs, id); }) == ErrorKind::kInvalid);
    sc = tiny_scenario(BenchMode::kRecycleDisk, 2);
    sc.config.seed = 99;
    CHECK(kind_of([&] { run_benchmark(sc, model, store.get(), docs, id); }) == ErrorKind::kConfig);
  }
  SUBCASE("entries from another model fail the equivalence gate") {
    const Model other([] {
      auto c = tiny_config();
      c.seed = 4;
      return c;
    }());
    MemoryStore wrong;
    populate_cache(wrong, other, id, 2, docs);
    CHECK(kind_of([&] { run_benchmark(tiny_scenario(BenchMode::kRecycleRam, 2), model, &wrong, docs, id); }) ==
          ErrorKind::kEquivalence);
  }
}

TEST_CASE("f16 stores pass the gate against the rounded reference") {
  const Model model(tiny_config());
  const auto docs = make_bench_documents(tiny_config(), 2, 8, 6);
  MemoryStore store(Dtype::kF16);
  populate_cache(store, model, "m", 1, docs);
  auto sc = tiny_scenario(BenchMode::kRecycleRam, 1);
  sc.batch = 2;
  const auto r = run_benchmark(sc, model, &store, docs, "m");
  CHECK(r.storage.bytes_per_seq == 8 * 16 * 2);
}

TEST_CASE("reports round-trip through JSON and CSV") {
  BenchReport r;
  r.scenario = tiny_scenario(BenchMode::kRecycleDiskPrefetch, 2);
  r.scenario.read_delay_ms = 1.5;
  r.baseline = stats_from_samples({10.0, 12.0, 11.0});
  r.variant = stats_from_samples({5.0, 6.5, 5.5});
  r.measured_speedup_pct = speedup_pct(r.baseline.mean_ms, r.variant.mean_ms);
  r.per_run_speedup_pct = 97.25;
  r.theoretical_speedup_pct = 100.0;
  r.wait_time_ms = 0.125;
  r.storage = {512, 64};

  CHECK(report_from_json(report_to_json(r)) == r);

  const std::vector<BenchReport> rows = {r, r};
  const auto csv = reports_to_csv(rows);
  const auto header_end = csv.find('\n');
  CHECK(csv.substr(0, header_end) == kCsvHeader);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("recycle_disk_prefetch,4,2,16,3,8,11,1,5.666666666666667,") != std::string::npos);

  TempDir dir;
  report_emit(r, ReportFormat::kJson, dir / "r.json");
  CHECK(report_from_json(embrec::testing::slurp(dir / "r.json")) == r);
  report_emit(rows, ReportFormat::kCsv, dir / "r.csv");
  CHECK(embrec::testing::slurp(dir / "r.csv") == csv);

  CHECK(parse_report_format("csv") == ReportFormat::kCsv);
  CHECK(kind_of([] { parse_report_format("xml"); }) == ErrorKind::kInvalid);
  CHECK(kind_of([] { report_from_json("{}"); }) == ErrorKind::kInvalid);
  CHECK(kind_of([&] { report_emit(r, ReportFormat::kJson, dir / "missing" / "r.json"); }) == ErrorKind::kIo);
}

TEST_CASE("time_paired alternates the stages") {
  std::string order;
  double now = 0.0;
  const auto [a, b] = time_paired([&] { order += 'a', now += 1.0; }, [&] { order += 'b', now += 3.0; }, 4, 1,
                                  [&] { return now; });
  CHECK(order == "ab" "ab" "ba" "ab" "ba");
  CHECK(a.per_rep_ms == std::vector<double>{1.0, 1.0, 1.0, 1.0});
  CHECK(b.mean_ms == doctest::Approx(3.0));
  CHECK(b.reps == 4);
}
