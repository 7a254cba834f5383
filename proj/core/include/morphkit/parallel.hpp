#pragma once

#include <cstddef>
#include <functional>

namespace morphkit {

// Number of workers used when a caller passes 0.
std::size_t default_worker_count();

// Runs body(i) for every i in [0, n) on up to `workers` threads. Each index is
// visited exactly once; callers write results into slot i so the outcome is
// independent of scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace morphkit
