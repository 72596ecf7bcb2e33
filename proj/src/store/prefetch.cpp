// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "embrec/prefetch.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <variant>

namespace embrec {

struct PrefetchIterator::State {
  using Result = std::variant<std::monostate, ActivationTensor, std::exception_ptr>;

  const TensorStore& store;
  std::vector<CacheKey> keys;
  std::size_t depth;

  std::mutex mu;
  std::condition_variable cv;
  std::vector<Result> slots;
  std::size_t next_claim = 0;  // next key a reader may take
  std::size_t consumed = 0;    // next key the consumer will return
  bool stop = false;
  bool finished = false;
  std::size_t peak = 0;
  double wait_ms = 0.0;
  std::vector<std::thread> readers;

  State(const TensorStore& s, std::vector<CacheKey> k, std::size_t d)
      : store(s), keys(std::move(k)), depth(std::min(d, keys.size())), slots(keys.size()) {
    for (std::size_t i = 0; i < depth; ++i) readers.emplace_back([this] { read_loop(); });
  }

  ~State() {
    {
      std::lock_guard lock(mu);
      stop = true;
    }
    cv.notify_all();
    for (auto& t : readers) t.join();
  }

  // Invariant: next_claim - consumed <= depth, so fetched-or-in-flight
  // entries never exceed the buffer capacity.
  void read_loop() {
    for (;;) {
      std::size_t index;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stop || next_claim >= keys.size() || next_claim < consumed + depth; });
        if (stop || next_claim >= keys.size()) return;
        index = next_claim++;
        peak = std::max(peak, next_claim - consumed);
      }
      Result result;
      try {
        result = store.get(keys[index]);
      } catch (...) {
        result = std::current_exception();
      }
      {
        std::lock_guard lock(mu);
        slots[index] = std::move(result);
      }
      cv.notify_all();
    }
  }

  std::optional<PrefetchItem> next() {
    using clock = std::chrono::steady_clock;
    if (finished || consumed >= keys.size()) return std::nullopt;
    const std::size_t index = consumed;
    Result result;
    const auto start = clock::now();
    if (depth == 0) {
      try {
        result = store.get(keys[index]);
      } catch (...) {
        result = std::current_exception();
      }
      wait_ms += std::chrono::duration<double, std::milli>(clock::now() - start).count();
      ++consumed;
    } else {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return !std::holds_alternative<std::monostate>(slots[index]); });
      wait_ms += std::chrono::duration<double, std::milli>(clock::now() - start).count();
      result = std::move(slots[index]);
      slots[index] = std::monostate{};
      ++consumed;
      lock.unlock();
      cv.notify_all();
    }
    if (auto* err = std::get_if<std::exception_ptr>(&result)) {
      finished = true;
      std::rethrow_exception(*err);
    }
    return PrefetchItem{keys[index], std::move(std::get<ActivationTensor>(result))};
  }
};

PrefetchIterator::PrefetchIterator(const TensorStore& store, std::vector<CacheKey> keys, std::size_t depth)
    : state_(std::make_unique<State>(store, std::move(keys), depth)) {}

PrefetchIterator::~PrefetchIterator() = default;
PrefetchIterator::PrefetchIterator(PrefetchIterator&&) noexcept = default;
PrefetchIterator& PrefetchIterator::operator=(PrefetchIterator&&) noexcept = default;

std::optional<PrefetchItem> PrefetchIterator::next() { return state_->next(); }

std::size_t PrefetchIterator::depth() const { return state_->depth; }

double PrefetchIterator::wait_ms() const { return state_->wait_ms; }

std::size_t PrefetchIterator::peak_buffered() const {
  std::lock_guard lock(state_->mu);
  return state_->peak;
}

}  // namespace embrec
