#pragma once

#include <cstddef>
#include <functional>

namespace liddense {

/// Worker cap: LIDDENSE_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_cap();

/// Runs body(i) for i in [0, n) on up to thread_cap() threads. Work items are
/// independent; callers store results by index so output order never depends
/// on scheduling. The first exception thrown by a body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace liddense
