#pragma once

#include <functional>

namespace dspec {

// Worker count from DSPEC_JOBS, or 1.
int default_jobs();

// Runs body(i) for i in [0, n) on up to `jobs` threads.  Each index is handled exactly once;
// callers write results into index-addressed slots so the outcome never depends on scheduling.
void parallel_for(int n, int jobs, const std::function<void(int)>& body);

}  // namespace dspec
