// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace replica_cdma {

// Worker count: REPLICA_CDMA_THREADS if set and positive, otherwise the
// hardware concurrency (at least 1).
int worker_count();

// Runs fn(0..n-1) over worker_count() threads. Indices are handed out
// dynamically; the first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace replica_cdma
