#include "parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

namespace infcost::detail {

std::size_t worker_count() {
  if (const char* env = std::getenv("INFCOST_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::size_t chunk_count(std::size_t n) {
  constexpr std::size_t kMinChunk = 2048;
  constexpr std::size_t kMaxChunks = 64;
  return std::clamp<std::size_t>(n / kMinChunk, 1, kMaxChunks);
}

void for_each_chunk(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t chunks = chunk_count(n);
  auto bounds = [&](std::size_t k) { return std::pair{n * k / chunks, n * (k + 1) / chunks}; };
  const std::size_t workers = std::min(worker_count(), chunks);
  if (workers <= 1) {
    for (std::size_t k = 0; k < chunks; ++k) {
      auto [b, e] = bounds(k);
      fn(k, b, e);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < chunks;) {
      if (failed.load()) return;
      try {
        auto [b, e] = bounds(k);
        fn(k, b, e);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace infcost::detail
