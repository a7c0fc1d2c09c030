#ifndef BUDGET_TREE_PARALLEL_HPP_
#define BUDGET_TREE_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace budget_tree {

// Worker cap: BUDGET_TREE_THREADS if set and positive, otherwise the
// hardware concurrency.
inline int WorkerCount() {
  if (const char* env = std::getenv("BUDGET_TREE_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker, so
// results written to per-index slots are independent of the thread count.
// The first exception thrown by any task is rethrown on the calling thread.
namespace detail {
inline thread_local bool in_worker = false;
}  // namespace detail

// Nested calls from inside a worker run serially.
template <typename Fn>
void ParallelFor(std::size_t n, Fn&& fn, int max_workers = WorkerCount()) {
  std::size_t workers = std::min<std::size_t>(n, std::max(1, max_workers));
  if (workers <= 1 || detail::in_worker) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      detail::in_worker = true;
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_PARALLEL_HPP_
