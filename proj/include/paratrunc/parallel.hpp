#pragma once

#include <cstddef>
#include <functional>

namespace paratrunc {

/// Number of worker threads used by parallel_for. Defaults to the value of
/// PARATRUNC_THREADS, or 1 when unset.
int thread_count();
void set_thread_count(int n);

/// Calls body(i) for i in [0, n). Work is split into contiguous chunks; each
/// index is visited exactly once, so results written per index do not depend
/// on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace paratrunc
