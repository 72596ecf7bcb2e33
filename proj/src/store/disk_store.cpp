// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "embrec/error.hpp"
#include "embrec/store.hpp"

namespace embrec {
namespace fs = std::filesystem;
namespace {

constexpr const char* kStoreJson = "store.json";
constexpr const char* kManifest = "manifest.jsonl";
constexpr const char* kLockFile = "store.lock";
constexpr std::array<char, 4> kMagic{'E', 'R', 'C', 'S'};

[[noreturn]] void io_fail(const std::string& what) {
  throw Error(ErrorKind::kIo, what + ": " + std::strerror(errno));
}

std::string shard_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "shard-%05zu.bin", index);
  return buf;
}

std::array<std::uint8_t, DiskStore::kShardHeaderBytes> shard_header(Dtype dtype) {
  return {static_cast<std::uint8_t>(kMagic[0]), static_cast<std::uint8_t>(kMagic[1]),
          static_cast<std::uint8_t>(kMagic[2]), static_cast<std::uint8_t>(kMagic[3]),
          static_cast<std::uint8_t>(DiskStore::kFormatVersion & 0xFF),
          static_cast<std::uint8_t>(DiskStore::kFormatVersion >> 8), static_cast<std::uint8_t>(dtype), 0};
}

void write_all(int fd, const std::uint8_t* data, std::size_t len, std::uint64_t offset, const std::string& what) {
  while (len > 0) {
    const ssize_t n = ::pwrite(fd, data, len, static_cast<off_t>(offset));
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("write " + what);
    }
    data += n;
    len -= static_cast<std::size_t>(n);
    offset += static_cast<std::uint64_t>(n);
  }
}

// Bytes actually read; short when the file ends early.
std::size_t read_at(int fd, std::uint8_t* data, std::size_t len, std::uint64_t offset) {
  std::size_t done = 0;
  while (done < len) {
    const ssize_t n = ::pread(fd, data + done, len - done, static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("read shard");
    }
    if (n == 0) break;
    done += static_cast<std::size_t>(n);
  }
  return done;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_finite_for(const ActivationTensor& t, Dtype dtype) {
  for (float v : t.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInput, "activation contains NaN or Inf");
    if (dtype == Dtype::kF16 && std::fabs(v) >= 65520.0f) {
      throw Error(ErrorKind::kRange, "activation value " + std::to_string(v) + " overflows binary16");
    }
  }
}

}  // namespace

DiskStore::DiskStore(fs::path root, OpenMode mode, StoreOptions options)
    : root_(std::move(root)), mode_(mode), options_(options) {}

DiskStore::~DiskStore() {
  for (const Shard& s : shards_) {
    if (s.fd >= 0) ::close(s.fd);
  }
  if (manifest_fd_ >= 0) ::close(manifest_fd_);
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

std::unique_ptr<DiskStore> DiskStore::create(const fs::path& root, Dtype dtype, StoreOptions options) {
  std::error_code ec;
  if (fs::exists(root / kStoreJson, ec)) {
    throw Error(ErrorKind::kAlreadyExists, "a store already exists at " + root.string());
  }
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + root.string() + ": " + ec.message());

  std::unique_ptr<DiskStore> store(new DiskStore(root, OpenMode::kReadWrite, options));
  store->lock_fd_ = ::open((root / kLockFile).c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (store->lock_fd_ < 0) io_fail("create " + (root / kLockFile).string());
  if (::flock(store->lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    throw Error(ErrorKind::kMode, "another writer holds " + (root / kLockFile).string());
  }
  // Lost a creation race after taking the lock.
  if (fs::exists(root / kStoreJson, ec)) {
    throw Error(ErrorKind::kAlreadyExists, "a store already exists at " + root.string());
  }

  store->dtype_ = dtype;
  const std::string first = shard_name(0);
  const int fd = ::open((root / first).c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("create " + (root / first).string());
  store->shards_.push_back({first, fd, kShardHeaderBytes});
  const auto header = shard_header(dtype);
  write_all(fd, header.data(), header.size(), 0, first);

  store->manifest_fd_ = ::open((root / kManifest).c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
  if (store->manifest_fd_ < 0) io_fail("create manifest");
  // store.json last: its presence marks a complete store.
  store->write_store_json();
  return store;
}

std::unique_ptr<DiskStore> DiskStore::open(const fs::path& root, OpenMode mode, StoreOptions options) {
  std::error_code ec;
  if (!fs::exists(root / kStoreJson, ec)) {
    throw Error(ErrorKind::kNotFound, "no store at " + root.string());
  }
  std::unique_ptr<DiskStore> store(new DiskStore(root, mode, options));
  if (mode == OpenMode::kReadWrite) {
    store->lock_fd_ = ::open((root / kLockFile).c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (store->lock_fd_ < 0) io_fail("open " + (root / kLockFile).string());
    if (::flock(store->lock_fd_, LOCK_EX | LOCK_NB) != 0) {
      throw Error(ErrorKind::kMode, "another writer holds " + (root / kLockFile).string());
    }
  }
  store->load();
  return store;
}

void DiskStore::load() {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(root_ / kStoreJson));
    if (meta.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorKind::kCorruption, "unsupported store version " + meta.at("version").dump());
    }
    dtype_ = parse_dtype(meta.at("dtype").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruption, std::string("store.json unreadable: ") + e.what());
  }

  const bool writable = mode_ == OpenMode::kReadWrite;
  for (const auto& name_json : meta.at("shards")) {
    Shard shard{name_json.get<std::string>(), -1, 0};
    shard.fd = ::open((root_ / shard.name).c_str(), (writable ? O_RDWR : O_RDONLY) | O_CLOEXEC);
    if (shard.fd >= 0) {
      struct stat st {};
      if (::fstat(shard.fd, &st) == 0) shard.size = static_cast<std::uint64_t>(st.st_size);
    } else if (writable) {
      throw Error(ErrorKind::kCorruption, "shard " + shard.name + " is missing");
    }
    shards_.push_back(std::move(shard));
  }
  if (shards_.empty()) throw Error(ErrorKind::kCorruption, "store.json lists no shards");

  std::string text = read_text(root_ / kManifest);
  const std::size_t complete = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
  if (complete != text.size()) {
    text.resize(complete);  // torn final append
    if (writable && ::truncate((root_ / kManifest).c_str(), static_cast<off_t>(complete)) != 0) {
      io_fail("truncate manifest");
    }
  }
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t end = text.find('\n', pos);
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    EntryMeta entry;
    try {
      entry = parse_manifest_line(line);
    } catch (const Error& e) {
      throw Error(ErrorKind::kCorruption, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (entry.dtype != dtype_ ||
        entry.byte_len != entry_size(static_cast<std::int64_t>(entry.seq_len),
                                     static_cast<std::int64_t>(entry.dim), entry.dtype)) {
      throw Error(ErrorKind::kCorruption, "manifest line " + std::to_string(line_no) + " has inconsistent sizes");
    }
    if (!index_.emplace(entry.key, entry).second) {
      throw Error(ErrorKind::kCorruption, "duplicate manifest key " + to_string(entry.key));
    }
    order_.push_back(entry.key);
  }

  if (writable) {
    manifest_fd_ = ::open((root_ / kManifest).c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (manifest_fd_ < 0) io_fail("open manifest");
  }
}

void DiskStore::write_store_json() const {
  nlohmann::ordered_json j;
  j["version"] = kFormatVersion;
  j["dtype"] = std::string(to_string(dtype_));
  j["shards"] = nlohmann::json::array();
  for (const Shard& s : shards_) j["shards"].push_back(s.name);
  const fs::path tmp = root_ / "store.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, root_ / kStoreJson, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot replace store.json: " + ec.message());
}

DiskStore::Shard& DiskStore::writable_shard(std::uint64_t payload_bytes) {
  Shard& current = shards_.back();
  const bool has_payload = current.size > kShardHeaderBytes;
  if (!has_payload || current.size + payload_bytes <= options_.shard_limit_bytes) return current;

  Shard next{shard_name(shards_.size()), -1, kShardHeaderBytes};
  next.fd = ::open((root_ / next.name).c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (next.fd < 0) io_fail("create " + next.name);
  const auto header = shard_header(dtype_);
  write_all(next.fd, header.data(), header.size(), 0, next.name);
  shards_.push_back(std::move(next));
  write_store_json();
  return shards_.back();
}

const DiskStore::Shard* DiskStore::shard_by_name(const std::string& name) const {
  for (const Shard& s : shards_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

EntryMeta DiskStore::put(const CacheKey& key, const ActivationTensor& t) {
  if (mode_ != OpenMode::kReadWrite) throw Error(ErrorKind::kMode, "store opened read-only");
  if (t.empty()) throw Error(ErrorKind::kShape, "cannot cache an empty tensor");
  check_finite_for(t, dtype_);
  const std::vector<std::uint8_t> payload = encode_payload(t, dtype_);

  std::unique_lock lock(mutex_);
  if (index_.contains(key)) throw Error(ErrorKind::kDuplicate, "key already cached: " + to_string(key));
  Shard& shard = writable_shard(payload.size());

  EntryMeta meta;
  meta.key = key;
  meta.seq_len = t.seq_len();
  meta.dim = t.dim();
  meta.dtype = dtype_;
  meta.shard = shard.name;
  meta.offset = shard.size;
  meta.byte_len = payload.size();
  meta.crc32 = crc32(payload);

  // Payload first, then the manifest line that makes it visible.
  write_all(shard.fd, payload.data(), payload.size(), shard.size, shard.name);
  shard.size += payload.size();
  const std::string line = manifest_line(meta) + "\n";
  const ssize_t n = ::write(manifest_fd_, line.data(), line.size());
  if (n != static_cast<ssize_t>(line.size())) io_fail("append manifest");

  index_.emplace(key, meta);
  order_.push_back(key);
  return meta;
}

std::vector<std::uint8_t> DiskStore::read_payload(const EntryMeta& meta) const {
  std::shared_lock lock(mutex_);
  const Shard* shard = shard_by_name(meta.shard);
  if (shard == nullptr || shard->fd < 0) {
    throw Error(ErrorKind::kCorruption, "shard " + meta.shard + " for " + to_string(meta.key) + " is missing");
  }
  std::array<std::uint8_t, kShardHeaderBytes> header{};
  if (read_at(shard->fd, header.data(), header.size(), 0) != header.size() || header != shard_header(dtype_)) {
    throw Error(ErrorKind::kCorruption, "shard " + meta.shard + " has a bad header");
  }
  if (meta.offset < kShardHeaderBytes) {
    throw Error(ErrorKind::kCorruption, "entry " + to_string(meta.key) + " overlaps the shard header");
  }
  std::vector<std::uint8_t> bytes(meta.byte_len);
  if (read_at(shard->fd, bytes.data(), bytes.size(), meta.offset) != bytes.size()) {
    throw Error(ErrorKind::kCorruption, "shard " + meta.shard + " truncated before " + to_string(meta.key));
  }
  if (crc32(bytes) != meta.crc32) {
    throw Error(ErrorKind::kCorruption, "checksum mismatch for " + to_string(meta.key));
  }
  return bytes;
}

ActivationTensor DiskStore::get(const CacheKey& key) const {
  const auto meta = find(key);
  if (!meta) throw Error(ErrorKind::kNotFound, "no cached entry " + to_string(key));
  const auto bytes = read_payload(*meta);
  return decode_payload(bytes, meta->seq_len, meta->dim, meta->dtype);
}

std::optional<EntryMeta> DiskStore::find(const CacheKey& key) const {
  std::shared_lock lock(mutex_);
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<EntryMeta> DiskStore::entries() const {
  std::shared_lock lock(mutex_);
  std::vector<EntryMeta> out;
  out.reserve(order_.size());
  for (const CacheKey& k : order_) out.push_back(index_.at(k));
  return out;
}

std::size_t DiskStore::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

std::vector<std::string> DiskStore::shards() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> names;
  for (const Shard& s : shards_) names.push_back(s.name);
  return names;
}

VerifyReport store_verify(const fs::path& root) {
  const auto store = DiskStore::open(root, OpenMode::kRead);
  VerifyReport report;
  for (const EntryMeta& meta : store->entries()) {
    ++report.entries;
    try {
      store->read_payload(meta);
      ++report.ok;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kCorruption) throw;
      report.corrupted.push_back({meta.key, e.what()});
    }
  }
  return report;
}

}  // namespace embrec
