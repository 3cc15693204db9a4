#pragma once

#include <cstddef>
#include <functional>

namespace sparselab {

/// Worker count used by parallel loops (default 1).
void set_threads(int k);
int threads();

/// Runs body(i) for i in [0, count) on up to threads() workers. Each index is
/// processed exactly once, so per-index results do not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sparselab
