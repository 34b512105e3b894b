#pragma once

#include <cstddef>
#include <functional>

namespace dkspde {

/// Hardware concurrency, at least 1.
unsigned hardware_threads();

/// Runs body(i) for every i in [0, count) on up to `threads` workers (0 means
/// hardware_threads()). Work is claimed by index, so results written to slot i
/// do not depend on the thread count. The exception of the lowest failing
/// index is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace dkspde
