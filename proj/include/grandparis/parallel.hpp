#pragma once

#include <cstddef>
#include <functional>

namespace grandparis {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items
/// must be independent; the first exception thrown is rethrown after all
/// workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Thread count from GRANDPARIS_THREADS, defaulting to 1.
int default_thread_count();

}  // namespace grandparis
