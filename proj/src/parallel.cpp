#include "pws/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pws {

namespace {
// Set while a thread runs a parallel_for chunk so nested loops stay serial.
thread_local bool t_inside_chunk = false;
}  // namespace

std::size_t worker_count() {
  if (t_inside_chunk) return 1;
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PWS_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
    } catch (const std::exception&) {
      // malformed values are ignored
    }
  }
  return n;
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                  std::size_t max_chunks) {
  if (n == 0) return;
  std::size_t chunks = std::min(n, worker_count());
  if (max_chunks > 0) chunks = std::min(chunks, max_chunks);
  if (chunks <= 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::thread> threads;
  threads.reserve(chunks - 1);
  auto run = [&](std::size_t c) {
    const std::size_t begin = n * c / chunks;
    const std::size_t end = n * (c + 1) / chunks;
    const bool was_inside = t_inside_chunk;
    t_inside_chunk = true;
    try {
      body(begin, end, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
    t_inside_chunk = was_inside;
  };
  for (std::size_t c = 1; c < chunks; ++c) threads.emplace_back(run, c);
  run(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pws
