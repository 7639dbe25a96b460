#pragma once

#include <cstddef>
#include <functional>

namespace bsde {

/// Worker count: explicit request if positive, else the BSDE_WORKERS
/// environment variable, else hardware concurrency.
int resolve_workers(int requested = 0);

/// Run fn(begin, end) over [0, n) split into fixed-size chunks pulled by a
/// pool of workers. Chunk boundaries do not depend on the worker count, so
/// any computation that is deterministic per index stays bitwise
/// reproducible under any parallelism. Exceptions are captured and rethrown.
void parallel_for_chunks(std::size_t n, int workers,
                         const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace bsde
