#pragma once
// Static-chunked parallel loop. Each index is handled by exactly one worker and
// writes only its own output slot, so results do not depend on the job count.
#include <cstddef>
#include <functional>

namespace lyaplab {

// Worker count used by parallel_for; 0 selects the hardware concurrency.
void set_jobs(int jobs);
int jobs();

// Calls body(i) for i in [0, n). The first exception thrown by any worker is
// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lyaplab
