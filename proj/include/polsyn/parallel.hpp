#pragma once

#include <cstddef>
#include <functional>

namespace polsyn {

/// Worker count: hardware concurrency, capped by ADVICE_MCTS_THREADS when set (>= 1).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. The first
/// exception thrown by any job is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace polsyn
