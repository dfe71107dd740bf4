#pragma once

#include <cstddef>
#include <functional>

namespace kg {

/// Worker count: hardware concurrency, capped by the KG_THREADS environment
/// variable when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Each index
/// is processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace kg
