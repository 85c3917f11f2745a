#include "ucov/parallel.hpp"

#include <omp.h>

namespace ucov::par {

void set_workers(int n) { omp_set_num_threads(n < 1 ? 1 : n); }

int workers() { return omp_get_max_threads(); }

namespace detail {

void run_parallel(std::int64_t count, void (*trampoline)(void*, std::int64_t), void* ctx,
                  std::exception_ptr& error) {
  std::mutex guard;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    {
      // skip remaining work once something failed
      std::lock_guard<std::mutex> lock(guard);
      if (error) continue;
    }
    try {
      trampoline(ctx, i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!error) error = std::current_exception();
    }
  }
}

}  // namespace detail

}  // namespace ucov::par
