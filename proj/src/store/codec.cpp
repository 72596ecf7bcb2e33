// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "embrec/error.hpp"
#include "embrec/store.hpp"

namespace embrec {

std::string to_string(const CacheKey& key) {
  return key.model_id + "/" + std::to_string(key.layer) + "/" + key.doc_id;
}

std::uint64_t entry_size(std::int64_t seq_len, std::int64_t dim, Dtype dtype) {
  if (seq_len <= 0 || dim <= 0) {
    throw Error(ErrorKind::kInvalid, "entry sizes must be positive (seq_len=" + std::to_string(seq_len) +
                                         ", dim=" + std::to_string(dim) + ")");
  }
  return static_cast<std::uint64_t>(seq_len) * static_cast<std::uint64_t>(dim) * bytes_per_element(dtype);
}

std::vector<std::uint8_t> encode_payload(const ActivationTensor& t, Dtype dtype) {
  if (dtype == Dtype::kF32) return to_le_bytes(t.values());
  std::vector<std::uint8_t> out(t.size() * 2);
  const auto values = t.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint16_t h = f32_to_f16(values[i]);
    out[2 * i] = static_cast<std::uint8_t>(h);
    out[2 * i + 1] = static_cast<std::uint8_t>(h >> 8);
  }
  return out;
}

ActivationTensor decode_payload(std::span<const std::uint8_t> bytes, std::size_t seq_len, std::size_t dim,
                                Dtype dtype) {
  const std::size_t n = seq_len * dim;
  if (bytes.size() != n * bytes_per_element(dtype)) {
    throw Error(ErrorKind::kCorruption, "payload holds " + std::to_string(bytes.size()) + " bytes, expected " +
                                            std::to_string(n * bytes_per_element(dtype)));
  }
  std::vector<float> values(n);
  if (dtype == Dtype::kF32) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                                 static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                                 static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                                 static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
      values[i] = std::bit_cast<float>(bits);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = f16_to_f32(static_cast<std::uint16_t>(bytes[2 * i] | bytes[2 * i + 1] << 8));
    }
  }
  return ActivationTensor(seq_len, dim, std::move(values));
}

std::string manifest_line(const EntryMeta& meta) {
  char crc[9];
  std::snprintf(crc, sizeof crc, "%08x", meta.crc32);
  nlohmann::ordered_json j;
  j["model_id"] = meta.key.model_id;
  j["layer"] = meta.key.layer;
  j["doc_id"] = meta.key.doc_id;
  j["seq_len"] = meta.seq_len;
  j["dim"] = meta.dim;
  j["dtype"] = std::string(to_string(meta.dtype));
  j["shard"] = meta.shard;
  j["offset"] = meta.offset;
  j["byte_len"] = meta.byte_len;
  j["crc32"] = crc;
  return j.dump();
}

EntryMeta parse_manifest_line(std::string_view line) {
  EntryMeta meta;
  try {
    const auto j = nlohmann::json::parse(line);
    meta.key.model_id = j.at("model_id").get<std::string>();
    meta.key.layer = j.at("layer").get<int>();
    meta.key.doc_id = j.at("doc_id").get<std::string>();
    meta.seq_len = j.at("seq_len").get<std::uint64_t>();
    meta.dim = j.at("dim").get<std::uint64_t>();
    meta.dtype = parse_dtype(j.at("dtype").get<std::string>());
    meta.shard = j.at("shard").get<std::string>();
    meta.offset = j.at("offset").get<std::uint64_t>();
    meta.byte_len = j.at("byte_len").get<std::uint64_t>();
    const auto crc = j.at("crc32").get<std::string>();
    if (crc.size() != 8 || crc.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
      throw Error(ErrorKind::kCorruption, "crc32 must be 8 hex digits");
    }
    meta.crc32 = static_cast<std::uint32_t>(std::stoul(crc, nullptr, 16));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruption, std::string("bad manifest line: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::kCorruption, std::string("bad manifest line: ") + e.what());
  }
  return meta;
}

}  // namespace embrec
