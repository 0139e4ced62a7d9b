#pragma once

#include <cstddef>
#include <functional>

namespace trackhdr {

// Process-wide worker count. Defaults to TRACKHDR_THREADS or the hardware
// concurrency. Results never depend on this value; only wall-clock does.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Runs body(i) for i in [0, n). Each index must write only to its own output
// slot. Exceptions from workers are rethrown on the calling thread (the one
// with the lowest index wins). Nested calls run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace trackhdr
