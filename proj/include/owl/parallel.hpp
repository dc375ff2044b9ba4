#pragma once

#include <cstddef>
#include <functional>

namespace owl {

/// Worker cap read from OWL_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();
/// Overrides OWL_THREADS for this process; 0 restores the environment default.
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Bodies must
/// write disjoint outputs; results then do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace owl
