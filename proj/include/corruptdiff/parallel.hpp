#pragma once

#include <cstddef>
#include <functional>

namespace corruptdiff {

/// Number of worker threads: CORRUPTDIFF_THREADS when set (floored at 1),
/// otherwise hardware concurrency.
std::size_t worker_count();

/// Runs fn(0..count-1) across workers. Work items must be independent; any
/// shared output must be slot-per-index so results never depend on thread
/// count or scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace corruptdiff
