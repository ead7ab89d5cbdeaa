#pragma once

#include <cstddef>
#include <functional>

namespace probitgp {

/// Environment variable holding the worker count. Results never depend on its value.
inline constexpr const char* kWorkersEnvVar = "PROBITGP_NUM_THREADS";

/// Worker count from PROBITGP_NUM_THREADS, defaulting to 1. Invalid values fall back to 1.
std::size_t worker_count();

/// Runs task(i) for every i in [0, count). Tasks are handed out in contiguous chunks to at most
/// worker_count() threads. Callers write results into per-task slots and reduce them in index
/// order afterwards, so the outcome does not depend on scheduling. The first exception thrown
/// by a task is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

}  // namespace probitgp
