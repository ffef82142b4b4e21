#pragma once

#include <cstddef>
#include <functional>

namespace elastoflow {

/// Upper bound on worker threads for internal data parallelism. Defaults to the
/// ELASTOFLOW_THREADS environment variable, else 1.
int thread_count();
void set_thread_count(int threads);

/// Runs fn(i) for i in [0, count) on up to thread_count() threads. Each index must
/// write only its own output slot; results are then independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace elastoflow
