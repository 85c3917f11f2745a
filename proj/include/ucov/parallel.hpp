#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <vector>

namespace ucov::par {

/// Serial loops are the reference path; parallel loops use OpenMP with a
/// static schedule. Both produce bit-identical results for every kernel in
/// this library because outputs are written per index and merged in index
/// order.
enum class Exec { Serial, Parallel };

void set_workers(int n);
int workers();

namespace detail {
void run_parallel(std::int64_t count, void (*trampoline)(void*, std::int64_t), void* ctx,
                  std::exception_ptr& error);
}

/// body(i) for every i in [0, count). body must only touch state owned by i.
template <class Body>
void for_each_index(std::int64_t count, Body&& body, Exec exec = Exec::Parallel) {
  if (exec == Exec::Serial || count < 2) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  auto trampoline = [](void* ctx, std::int64_t i) { (*static_cast<Body*>(ctx))(i); };
  detail::run_parallel(count, trampoline, &body, error);
  if (error) std::rethrow_exception(error);
}

/// Fixed-size chunking with an ordered combine. Chunk c covers
/// [c * chunk, min(total, (c + 1) * chunk)); body(acc, begin, end, c) fills
/// the chunk's accumulator, and the partials are merged left to right, so
/// the result does not depend on the worker count.
template <class Acc, class Make, class Body>
Acc chunked_reduce(std::int64_t total, std::int64_t chunk, Make&& make, Body&& body,
                   Exec exec = Exec::Parallel) {
  if (chunk < 1) chunk = 1;
  const std::int64_t chunks = (total + chunk - 1) / chunk;
  std::vector<Acc> partial;
  partial.reserve(static_cast<std::size_t>(chunks));
  for (std::int64_t c = 0; c < chunks; ++c) partial.push_back(make());
  for_each_index(
      chunks,
      [&](std::int64_t c) {
        const std::int64_t begin = c * chunk;
        const std::int64_t end = begin + chunk < total ? begin + chunk : total;
        body(partial[static_cast<std::size_t>(c)], begin, end, c);
      },
      exec);
  Acc out = make();
  for (const auto& p : partial) out.merge(p);
  return out;
}

}  // namespace ucov::par
