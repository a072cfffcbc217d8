#include "geopath/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geopath {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer over seed xor a salted step
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double RandomStream::normal() {
    double u1 = 0.0;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RandomStream::uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    const std::uint64_t bound = n;
    const std::uint64_t threshold = (-bound) % bound;  // 2^64 mod n
    std::uint64_t x = 0;
    do {
        x = next_u64();
    } while (x < threshold);
    return static_cast<std::size_t>(x % bound);
}

}  // namespace geopath
