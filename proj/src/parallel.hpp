#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace infcost::detail {

// Worker cap from INFCOST_THREADS, else hardware concurrency; at least 1.
std::size_t worker_count();

// Splits [0, n) into a fixed number of chunks that depends only on n, so
// per-chunk partial results combined in chunk order are reproducible for any
// thread count. fn(chunk, begin, end) must only touch its own chunk's state.
std::size_t chunk_count(std::size_t n);
void for_each_chunk(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace infcost::detail
