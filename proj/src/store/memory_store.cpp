// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <thread>

#include "embrec/error.hpp"
#include "embrec/store.hpp"

namespace embrec {

std::unique_ptr<MemoryStore> MemoryStore::copy_of(const TensorStore& source) {
  auto copy = std::make_unique<MemoryStore>(source.dtype());
  for (const EntryMeta& meta : source.entries()) copy->put(meta.key, source.get(meta.key));
  return copy;
}

EntryMeta MemoryStore::put(const CacheKey& key, const ActivationTensor& t) {
  if (t.empty()) throw Error(ErrorKind::kShape, "cannot cache an empty tensor");
  for (float v : t.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInput, "activation contains NaN or Inf");
    if (dtype_ == Dtype::kF16 && std::fabs(v) >= 65520.0f) {
      throw Error(ErrorKind::kRange, "activation value overflows binary16");
    }
  }
  const auto payload = encode_payload(t, dtype_);

  std::unique_lock lock(mutex_);
  if (index_.contains(key)) throw Error(ErrorKind::kDuplicate, "key already cached: " + to_string(key));
  EntryMeta meta;
  meta.key = key;
  meta.seq_len = t.seq_len();
  meta.dim = t.dim();
  meta.dtype = dtype_;
  meta.shard = "memory";
  meta.offset = next_offset_;
  meta.byte_len = payload.size();
  meta.crc32 = crc32(payload);
  next_offset_ += payload.size();
  ActivationTensor stored = dtype_ == Dtype::kF32 ? t : decode_payload(payload, t.seq_len(), t.dim(), dtype_);
  index_.emplace(key, Slot{meta, std::move(stored)});
  order_.push_back(key);
  return meta;
}

ActivationTensor MemoryStore::get(const CacheKey& key) const {
  std::shared_lock lock(mutex_);
  const auto it = index_.find(key);
  if (it == index_.end()) throw Error(ErrorKind::kNotFound, "no cached entry " + to_string(key));
  return it->second.tensor;
}

std::optional<EntryMeta> MemoryStore::find(const CacheKey& key) const {
  std::shared_lock lock(mutex_);
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second.meta;
}

std::vector<EntryMeta> MemoryStore::entries() const {
  std::shared_lock lock(mutex_);
  std::vector<EntryMeta> out;
  out.reserve(order_.size());
  for (const CacheKey& k : order_) out.push_back(index_.at(k).meta);
  return out;
}

std::size_t MemoryStore::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

EntryMeta ThrottledStore::put(const CacheKey&, const ActivationTensor&) {
  throw Error(ErrorKind::kMode, "throttled view is read-only");
}

ActivationTensor ThrottledStore::get(const CacheKey& key) const {
  std::this_thread::sleep_for(delay_);
  return inner_.get(key);
}

}  // namespace embrec
