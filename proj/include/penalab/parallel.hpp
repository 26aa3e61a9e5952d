#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace penalab {

// Worker count: `requested` (0 means hardware concurrency), capped by the
// PENALAB_THREADS environment variable when set.
std::size_t worker_count(std::size_t requested = 0);

// Calls body(i) for i in [0, n) on up to `workers` threads. Results must be
// written by index; scheduling never changes them.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace penalab
