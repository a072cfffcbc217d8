#pragma once

#include <cstddef>
#include <functional>

namespace geopath {

// Global worker count used by parallel_chunks. 1 (the default) runs inline.
void set_thread_count(int n);
int thread_count();

// Runs fn(chunk_idx, begin, end) over [0, total) split into fixed-size
// chunks. Chunk boundaries depend only on total and chunk_size, never on
// the thread count, so callers that write per-chunk slots and reduce them
// in chunk order get bit-identical results at any --threads setting.
// Not reentrant: fn must not call parallel_chunks itself.
void parallel_chunks(std::size_t total, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t total, std::size_t chunk_size) {
    return total == 0 ? 0 : (total + chunk_size - 1) / chunk_size;
}

// Fixed row chunk used by the batched network kernels.
inline constexpr std::size_t kRowChunk = 64;

}  // namespace geopath
