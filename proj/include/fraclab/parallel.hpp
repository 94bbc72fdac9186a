#pragma once

#include <cstddef>
#include <functional>

namespace fraclab {

/// Worker count: FRACLAB_THREADS if set to a positive integer, else the hardware concurrency.
int thread_budget();

/// Runs body(i) for i in [0, count) on up to thread_budget() threads. Each index is
/// visited exactly once, so results written by index are independent of scheduling.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fraclab
