#pragma once

#include <cstddef>
#include <functional>

namespace drq {

// Process-wide kernel threading. Reproducible mode pins every batched kernel
// to one thread so reductions happen in a fixed order.
void set_num_threads(std::size_t n);
std::size_t num_threads();
void set_reproducible(bool on);
bool reproducible();

// Splits [0, n) into contiguous chunks, one per worker, and runs
// fn(begin, end, worker) on each. Chunk boundaries depend only on n and the
// thread count. Runs inline when one worker suffices.
void parallel_for_chunks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Number of chunks parallel_for_chunks will use for n items.
std::size_t chunk_count(std::size_t n);

}  // namespace drq
