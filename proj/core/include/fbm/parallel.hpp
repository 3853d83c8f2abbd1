#pragma once

#include <cstddef>
#include <functional>

namespace fbm {

/// Worker count: `requested` if nonzero, else hardware concurrency; either
/// way capped by the FEEDBACK_MARKET_THREADS environment variable when set.
unsigned resolve_threads(unsigned requested = 0);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Indices are
/// handed out dynamically; callers write results into per-index slots so the
/// outcome does not depend on scheduling. If any body throws, the exception
/// from the smallest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace fbm
