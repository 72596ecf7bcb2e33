// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <fstream>
#include <string>

#include <json.hpp>

#include "embrec/bench.hpp"
#include "embrec/error.hpp"

namespace embrec {
namespace {

using nlohmann::ordered_json;

ordered_json stats_json(const TimingStats& s) {
  ordered_json j;
  j["mean_ms"] = s.mean_ms;
  j["stdev_ms"] = s.stdev_ms;
  j["reps"] = s.reps;
  j["per_rep_ms"] = s.per_rep_ms;
  return j;
}

TimingStats stats_from(const nlohmann::json& j) {
  TimingStats s;
  s.mean_ms = j.at("mean_ms").get<double>();
  s.stdev_ms = j.at("stdev_ms").get<double>();
  s.reps = j.at("reps").get<int>();
  s.per_rep_ms = j.at("per_rep_ms").get<std::vector<double>>();
  return s;
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write report '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw Error(ErrorKind::kIo, "short write to report '" + path.string() + "'");
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw Error(ErrorKind::kInvalid, "unknown report format '" + std::string(name) + "' (expected json or csv)");
}

std::string report_to_json(const BenchReport& r) {
  ordered_json sc;
  sc["config"] = ordered_json::parse(config_to_json(r.scenario.config));
  sc["mode"] = std::string(to_string(r.scenario.mode));
  sc["k"] = r.scenario.k;
  sc["batch"] = r.scenario.batch;
  sc["seq_len"] = r.scenario.seq_len;
  sc["prefetch_depth"] = r.scenario.prefetch_depth;
  sc["reps"] = r.scenario.reps;
  sc["warmup"] = r.scenario.warmup;
  sc["read_delay_ms"] = r.scenario.read_delay_ms;

  ordered_json j;
  j["scenario"] = std::move(sc);
  j["baseline"] = stats_json(r.baseline);
  j["variant"] = stats_json(r.variant);
  j["measured_speedup_pct"] = r.measured_speedup_pct;
  j["per_run_speedup_pct"] = r.per_run_speedup_pct;
  j["theoretical_speedup_pct"] = r.theoretical_speedup_pct;
  j["wait_time_ms"] = r.wait_time_ms;
  j["storage"] = {{"bytes_per_seq", r.storage.bytes_per_seq}, {"bytes_per_token", r.storage.bytes_per_token}};
  return j.dump(2);
}

BenchReport report_from_json(std::string_view text) {
  BenchReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& sc = j.at("scenario");
    r.scenario.config = config_from_json(sc.at("config").dump());
    r.scenario.mode = parse_bench_mode(sc.at("mode").get<std::string>());
    r.scenario.k = sc.at("k").get<int>();
    r.scenario.batch = sc.at("batch").get<int>();
    r.scenario.seq_len = sc.at("seq_len").get<int>();
    r.scenario.prefetch_depth = sc.at("prefetch_depth").get<std::size_t>();
    r.scenario.reps = sc.at("reps").get<int>();
    r.scenario.warmup = sc.at("warmup").get<int>();
    r.scenario.read_delay_ms = sc.at("read_delay_ms").get<double>();
    r.baseline = stats_from(j.at("baseline"));
    r.variant = stats_from(j.at("variant"));
    r.measured_speedup_pct = j.at("measured_speedup_pct").get<double>();
    r.per_run_speedup_pct = j.at("per_run_speedup_pct").get<double>();
    r.theoretical_speedup_pct = j.at("theoretical_speedup_pct").get<double>();
    r.wait_time_ms = j.at("wait_time_ms").get<double>();
    r.storage.bytes_per_seq = j.at("storage").at("bytes_per_seq").get<std::uint64_t>();
    r.storage.bytes_per_token = j.at("storage").at("bytes_per_token").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalid, std::string("malformed bench report: ") + e.what());
  }
  return r;
}

std::string reports_to_csv(std::span<const BenchReport> reports) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : reports) {
    const auto& s = r.scenario;
    out += std::string(to_string(s.mode)) + ',' + std::to_string(s.config.n_layers) + ',' + std::to_string(s.k) +
           ',' + std::to_string(s.config.d_model) + ',' + std::to_string(s.batch) + ',' +
           std::to_string(s.seq_len) + ',' + num(r.baseline.mean_ms) + ',' + num(r.baseline.stdev_ms) + ',' +
           num(r.variant.mean_ms) + ',' + num(r.variant.stdev_ms) + ',' + num(r.measured_speedup_pct) + ',' +
           num(r.theoretical_speedup_pct) + ',' + num(r.wait_time_ms) + ',' +
           std::to_string(r.storage.bytes_per_seq) + '\n';
  }
  return out;
}

void report_emit(const BenchReport& report, ReportFormat format, const std::filesystem::path& path) {
  report_emit(std::span<const BenchReport>(&report, 1), format, path);
}

void report_emit(std::span<const BenchReport> reports, ReportFormat format, const std::filesystem::path& path) {
  if (format == ReportFormat::kCsv) {
    write_file(path, reports_to_csv(reports));
    return;
  }
  if (reports.size() == 1) {
    write_file(path, report_to_json(reports[0]) + "\n");
    return;
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(nlohmann::ordered_json::parse(report_to_json(r)));
  write_file(path, arr.dump(2) + "\n");
}

}  // namespace embrec
