// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

// Activation cache.
//
// On disk a store is a directory:
//   store.json       {"version": 1, "dtype": "f32"|"f16", "shards": [...]}
//   manifest.jsonl   one JSON object per entry, appended after its payload
//   shard-NNNNN.bin  "ERCS" | u16 version | u8 dtype | u8 reserved, then raw
//                    little-endian row-major payloads back to back
//   store.lock       flock()ed by the single read-write handle
//
// A torn final manifest line (crash mid-append) is dropped on open.

#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "embrec/core.hpp"
#include "embrec/tensor.hpp"

namespace embrec {

struct CacheKey {
  std::string model_id;
  int layer = 0;
  std::string doc_id;

  auto operator<=>(const CacheKey&) const = default;
  bool operator==(const CacheKey&) const = default;
};

std::string to_string(const CacheKey& key);

struct EntryMeta {
  CacheKey key;
  std::uint64_t seq_len = 0;
  std::uint64_t dim = 0;
  Dtype dtype = Dtype::kF32;
  std::string shard;
  std::uint64_t offset = 0;
  std::uint64_t byte_len = 0;
  std::uint32_t crc32 = 0;

  bool operator==(const EntryMeta&) const = default;
};

/// seq_len * dim * bytes_per_element(dtype). Throws kInvalid for non-positive sizes.
std::uint64_t entry_size(std::int64_t seq_len, std::int64_t dim, Dtype dtype);

// Payload codec shared by every store variant.
std::vector<std::uint8_t> encode_payload(const ActivationTensor& t, Dtype dtype);
ActivationTensor decode_payload(std::span<const std::uint8_t> bytes, std::size_t seq_len, std::size_t dim,
                                Dtype dtype);

// Manifest line codec (no trailing newline).
std::string manifest_line(const EntryMeta& meta);
EntryMeta parse_manifest_line(std::string_view line);

/// Common interface of the disk and RAM caches. get() may be called
/// concurrently from several threads; put() needs external serialisation
/// against other puts.
class TensorStore {
 public:
  virtual ~TensorStore() = default;

  virtual Dtype dtype() const = 0;
  virtual EntryMeta put(const CacheKey& key, const ActivationTensor& t) = 0;
  virtual ActivationTensor get(const CacheKey& key) const = 0;
  virtual std::optional<EntryMeta> find(const CacheKey& key) const = 0;
  virtual std::vector<EntryMeta> entries() const = 0;
  virtual std::size_t size() const = 0;

  bool contains(const CacheKey& key) const { return find(key).has_value(); }
};

enum class OpenMode { kRead, kReadWrite };

struct StoreOptions {
  std::uint64_t shard_limit_bytes = 256ull << 20;
};

class DiskStore final : public TensorStore {
 public:
  static constexpr std::uint16_t kFormatVersion = 1;
  static constexpr std::size_t kShardHeaderBytes = 8;

  /// Creates an empty store and returns it opened read-write. kAlreadyExists
  /// if `root` already holds a store, kIo if it cannot be written.
  static std::unique_ptr<DiskStore> create(const std::filesystem::path& root, Dtype dtype,
                                           StoreOptions options = {});
  /// kNotFound if there is no store at `root`; kMode if read-write is requested
  /// while another handle holds the writer lock.
  static std::unique_ptr<DiskStore> open(const std::filesystem::path& root, OpenMode mode = OpenMode::kRead,
                                         StoreOptions options = {});

  ~DiskStore() override;
  DiskStore(const DiskStore&) = delete;
  DiskStore& operator=(const DiskStore&) = delete;

  Dtype dtype() const override { return dtype_; }
  EntryMeta put(const CacheKey& key, const ActivationTensor& t) override;
  ActivationTensor get(const CacheKey& key) const override;
  std::optional<EntryMeta> find(const CacheKey& key) const override;
  std::vector<EntryMeta> entries() const override;
  std::size_t size() const override;

  /// Raw payload bytes after bounds and checksum validation.
  std::vector<std::uint8_t> read_payload(const EntryMeta& meta) const;

  const std::filesystem::path& root() const { return root_; }
  OpenMode mode() const { return mode_; }
  std::vector<std::string> shards() const;

 private:
  struct Shard {
    std::string name;
    int fd = -1;
    std::uint64_t size = 0;
  };

  DiskStore(std::filesystem::path root, OpenMode mode, StoreOptions options);
  void load();
  void write_store_json() const;
  Shard& writable_shard(std::uint64_t payload_bytes);
  const Shard* shard_by_name(const std::string& name) const;

  std::filesystem::path root_;
  OpenMode mode_;
  StoreOptions options_;
  Dtype dtype_ = Dtype::kF32;
  int lock_fd_ = -1;
  int manifest_fd_ = -1;

  mutable std::shared_mutex mutex_;
  std::vector<Shard> shards_;
  std::map<CacheKey, EntryMeta> index_;
  std::vector<CacheKey> order_;
};

/// RAM-resident cache with the same semantics: payloads pass through the
/// store dtype on put, so an F16 memory store returns the same values as an
/// F16 disk store.
class MemoryStore final : public TensorStore {
 public:
  explicit MemoryStore(Dtype dtype = Dtype::kF32) : dtype_(dtype) {}

  /// Loads every entry of `source` into RAM.
  static std::unique_ptr<MemoryStore> copy_of(const TensorStore& source);

  Dtype dtype() const override { return dtype_; }
  EntryMeta put(const CacheKey& key, const ActivationTensor& t) override;
  ActivationTensor get(const CacheKey& key) const override;
  std::optional<EntryMeta> find(const CacheKey& key) const override;
  std::vector<EntryMeta> entries() const override;
  std::size_t size() const override;

 private:
  struct Slot {
    EntryMeta meta;
    ActivationTensor tensor;
  };
  Dtype dtype_;
  mutable std::shared_mutex mutex_;
  std::map<CacheKey, Slot> index_;
  std::vector<CacheKey> order_;
  std::uint64_t next_offset_ = 0;
};

/// Read-only view that sleeps for a fixed delay before every get(), standing
/// in for slow storage in benchmarks.
class ThrottledStore final : public TensorStore {
 public:
  ThrottledStore(const TensorStore& inner, std::chrono::microseconds delay) : inner_(inner), delay_(delay) {}

  Dtype dtype() const override { return inner_.dtype(); }
  EntryMeta put(const CacheKey& key, const ActivationTensor& t) override;
  ActivationTensor get(const CacheKey& key) const override;
  std::optional<EntryMeta> find(const CacheKey& key) const override { return inner_.find(key); }
  std::vector<EntryMeta> entries() const override { return inner_.entries(); }
  std::size_t size() const override { return inner_.size(); }

 private:
  const TensorStore& inner_;
  std::chrono::microseconds delay_;
};

struct CorruptEntry {
  CacheKey key;
  std::string reason;
};

struct VerifyReport {
  std::size_t entries = 0;
  std::size_t ok = 0;
  std::vector<CorruptEntry> corrupted;
};

/// Reads and checksums every manifest entry. Damaged shards are reported per
/// entry, never thrown. kNotFound if there is no store at `root`.
VerifyReport store_verify(const std::filesystem::path& root);

}  // namespace embrec
