#include "pluto/parallel.hpp"

namespace pluto {

namespace {
std::atomic<int> g_max_threads{1};
}

void set_max_threads(int n) {
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  g_max_threads = n;
}

int max_threads() { return g_max_threads.load(); }

bool& detail::in_parallel_region() {
  thread_local bool flag = false;
  return flag;
}

}  // namespace pluto
