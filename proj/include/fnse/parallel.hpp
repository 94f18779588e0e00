#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fnse {

/// Process-wide worker cap; 0 means hardware concurrency. Set once by the CLI.
int& worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads.
///
/// Work items are claimed from a shared atomic counter, so the assignment of
/// items to threads is arbitrary -- callers must write results into
/// per-item slots and do any cross-item reduction afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fnse
