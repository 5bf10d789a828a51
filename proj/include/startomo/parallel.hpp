#pragma once

#include <cstddef>
#include <functional>

namespace startomo {

/// Worker count: STARTOMO_THREADS if set and positive, otherwise the hardware
/// concurrency (at least 1).
int worker_count();

/// Runs body(k) for k in [0, count) using up to worker_count() threads with a
/// static contiguous partition. Each index must write only its own output slot.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace startomo
