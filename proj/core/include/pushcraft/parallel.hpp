#pragma once

#include <cstddef>
#include <functional>

namespace pushcraft {

/// Worker count from PUSHCRAFT_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Work is statically partitioned so results
/// do not depend on the thread count as long as body writes only slot i.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pushcraft
