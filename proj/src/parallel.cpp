#include "bsde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bsde {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BSDE_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_chunks(std::size_t n, int workers,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  constexpr std::size_t kChunk = 1024;
  workers = resolve_workers(workers);
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  if (workers <= 1 || n_chunks == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c)
      fn(c * kChunk, std::min(n, (c + 1) * kChunk));
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::vector<std::thread> pool;
  const int count = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n_chunks));
  std::mutex err_mutex;
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t c = next.fetch_add(1);
        if (c >= n_chunks || failed.load(std::memory_order_relaxed)) return;
        try {
          fn(c * kChunk, std::min(n, (c + 1) * kChunk));
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace bsde
