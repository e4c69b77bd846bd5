#pragma once

#include <cstddef>
#include <functional>

namespace gdd {

// Global worker cap shared by all parallel loops. 0 means "use hardware
// concurrency". The CLI sets this from --threads / GDD_THREADS.
void set_thread_count(int threads);
int thread_count();

// Runs fn(i) for i in [0, count). Each index writes only its own output
// slot, so results are bitwise independent of the schedule.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace gdd
