#pragma once

#include <cstddef>
#include <functional>

namespace proxycam {

/// Worker count: PROXYCAM_THREADS when set, hardware concurrency otherwise.
int worker_count();

/// Run fn(i) for i in [0, n) across workers. Results must not depend on the
/// execution order; the partition is deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace proxycam
