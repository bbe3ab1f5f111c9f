#pragma once

#include <cstddef>
#include <functional>

namespace abcnet {

/// Runs body(0) .. body(n - 1) on up to `threads` workers (0 = hardware
/// concurrency). Indices are handed out dynamically; the first exception
/// thrown by any body is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace abcnet
