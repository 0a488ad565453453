#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pluto {

/// Worker cap shared by all library loops; 1 runs everything inline.
void set_max_threads(int n);
int max_threads();

namespace detail {
/// True on threads already running inside a parallel_for; nested loops then
/// run inline instead of multiplying workers.
bool& in_parallel_region();
}  // namespace detail

/// Runs fn(i) for i in [0, n). Each index must write only its own output
/// slot; the first exception is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, max_threads())), n);
  if (workers <= 1 || detail::in_parallel_region()) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    detail::in_parallel_region() = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  detail::in_parallel_region() = false;
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pluto
