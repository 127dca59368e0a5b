#pragma once

#include <cstddef>
#include <functional>

namespace semrd {

/// Worker count: SEMRD_THREADS when set and positive, else the hardware
/// concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Exceptions
/// from the lowest failing index are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace semrd
