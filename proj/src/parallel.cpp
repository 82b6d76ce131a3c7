#include "heatlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace heatlab {

int thread_count(int requested) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("HEATLAB_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) n = cap;
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  if (requested > 0) n = std::min(n, requested);
  return std::max(n, 1);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads) {
  const int workers = static_cast<int>(std::min<std::size_t>(thread_count(threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<bool> stop{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::size_t lo = n * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers);
    const std::size_t hi = n * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(workers);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi && !stop.load(std::memory_order_relaxed); ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace heatlab
