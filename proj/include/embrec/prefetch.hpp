// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "embrec/store.hpp"

namespace embrec {

struct PrefetchItem {
  CacheKey key;
  ActivationTensor tensor;
};

/// Yields store entries in key order while up to `depth` reads run ahead of
/// the consumer on background threads. depth 0 reads synchronously inside
/// next(). Destroying the iterator cancels outstanding work and joins the
/// readers; the store must outlive it.
class PrefetchIterator {
 public:
  PrefetchIterator(const TensorStore& store, std::vector<CacheKey> keys, std::size_t depth);
  ~PrefetchIterator();
  PrefetchIterator(PrefetchIterator&&) noexcept;
  PrefetchIterator& operator=(PrefetchIterator&&) noexcept;

  /// Next entry, or nullopt when exhausted. A failed read (missing key,
  /// corruption) is rethrown at its position; the iterator is finished after.
  std::optional<PrefetchItem> next();

  /// Effective depth after clamping to the number of keys.
  std::size_t depth() const;
  /// Total time next() spent blocked waiting for data, in milliseconds.
  double wait_ms() const;
  /// Largest number of fetched-or-in-flight, unconsumed entries observed.
  std::size_t peak_buffered() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

inline PrefetchIterator prefetch_iter(const TensorStore& store, std::vector<CacheKey> keys, std::size_t depth) {
  return PrefetchIterator(store, std::move(keys), depth);
}

}  // namespace embrec
