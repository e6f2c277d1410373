#pragma once

#include <cstddef>
#include <functional>

namespace pitchcast {

/// Number of hardware threads, at least 1.
unsigned default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Work is split
/// into contiguous blocks, so results written by index are deterministic.
/// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace pitchcast
