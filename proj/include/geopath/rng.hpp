#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace geopath {

// Derives an independent substream seed from (seed, salt). Two salts give
// uncorrelated streams, so e.g. weight init and batch shuffling never share
// draws even when the user supplies one global seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Seeded random stream. All distributions are implemented on top of the raw
// mt19937_64 output (which the standard pins down exactly), so a given seed
// yields the same bytes on every platform. std::normal_distribution and
// std::shuffle are implementation-defined and not used.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; consumes a whole number of draws per
    // call (no cached spare), keeping the stream position easy to reason about.
    double normal();

    // [0, n), unbiased via rejection
    std::size_t uniform_index(std::size_t n);

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace geopath
