#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace nfqs {

inline int default_threads() {
  if (const char* env = std::getenv("NFQS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Chunked parallel reduction with a thread-count-independent result: items are
// processed per fixed-size chunk into chunk-local accumulators, which are then
// combined sequentially in chunk order. fn(thread_id, item, slot) must add its
// contribution into slot.
inline void parallel_chunk_reduce(
    int n_items, int chunk_size, int width, int n_threads, std::span<double> out,
    const std::function<void(int, int, std::span<double>)>& fn) {
  if (n_threads <= 0) n_threads = default_threads();
  const int n_chunks = (n_items + chunk_size - 1) / chunk_size;
  std::vector<double> slots(static_cast<size_t>(n_chunks) * width, 0.0);
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&](int tid) {
    try {
      for (;;) {
        const int c = next.fetch_add(1);
        if (c >= n_chunks) break;
        std::span<double> slot(slots.data() + static_cast<size_t>(c) * width, width);
        const int begin = c * chunk_size;
        const int end = std::min(n_items, begin + chunk_size);
        for (int i = begin; i < end; ++i) fn(tid, i, slot);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!first_error) first_error = std::current_exception();
    }
  };
  if (n_threads == 1 || n_items <= chunk_size) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  for (double& o : out) o = 0.0;
  for (int c = 0; c < n_chunks; ++c)
    for (int w = 0; w < width; ++w)
      out[w] += slots[static_cast<size_t>(c) * width + w];
}

}  // namespace nfqs
