#pragma once

#include <cstddef>
#include <functional>

namespace pws {

/// Worker count: hardware concurrency, capped by the PWS_THREADS environment
/// variable when it holds a positive integer.
std::size_t worker_count();

/// Splits [0, n) into at most worker_count() contiguous chunks and runs
/// body(begin, end, chunk) for each, the first on the calling thread.
/// Exceptions from any chunk are rethrown after all chunks finish. Inside a
/// chunk worker_count() reports 1, so nested loops run serially.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t begin, std::size_t end, std::size_t chunk)>& body,
                  std::size_t max_chunks = 0);

}  // namespace pws
