#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "cpstir/rng.hpp"

namespace cpstir {

/// Replications are grouped into chunks of this many consecutive indices.
/// Each chunk has its own accumulator, and chunk accumulators are merged in
/// chunk order, so results do not depend on the worker count.
inline constexpr std::uint64_t kReplicationChunk = 1024;

/// Runs `body(rep, stream, acc)` for rep in [first, first + n_reps), where
/// `stream` is `base.child(rep)` and `acc` is the accumulator of the chunk the
/// replication belongs to. `make()` builds an empty accumulator; accumulators
/// need `merge(const Acc&)`.
template <class Make, class Body>
auto replicate(std::uint64_t n_reps, unsigned workers, const SeededStream& base, Make make, Body body,
               std::uint64_t first = 0) {
  using Acc = decltype(make());
  const std::uint64_t n_chunks = (n_reps + kReplicationChunk - 1) / kReplicationChunk;
  std::vector<Acc> partial;
  partial.reserve(n_chunks);
  for (std::uint64_t c = 0; c < n_chunks; ++c) partial.push_back(make());

  auto run_chunk = [&](std::uint64_t c) {
    const std::uint64_t lo = c * kReplicationChunk;
    const std::uint64_t hi = std::min(n_reps, lo + kReplicationChunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      SeededStream s = base.child(first + i);
      body(first + i, s, partial[c]);
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(workers, 1u), std::max<std::uint64_t>(n_chunks, 1)));
  if (n_threads <= 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::uint64_t c = next++; c < n_chunks; c = next++) {
          try {
            run_chunk(c);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = n_chunks;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  Acc total = make();
  for (const auto& p : partial) total.merge(p);
  return total;
}

/// Fixed-size array of accumulators merged elementwise.
template <class Acc>
struct AccumulatorArray {
  std::vector<Acc> items;
  explicit AccumulatorArray(std::size_t n = 0) : items(n) {}
  Acc& operator[](std::size_t i) { return items[i]; }
  const Acc& operator[](std::size_t i) const { return items[i]; }
  std::size_t size() const { return items.size(); }
  void merge(const AccumulatorArray& o) {
    for (std::size_t i = 0; i < items.size(); ++i) items[i].merge(o.items[i]);
  }
};

/// Integer tallies that merge by addition.
struct CountAccumulator {
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  void merge(const CountAccumulator& o) {
    hits += o.hits;
    total += o.total;
  }
};

}  // namespace cpstir
