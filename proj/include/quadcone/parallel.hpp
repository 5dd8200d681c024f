#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace qc {

// Worker count used by every parallel loop. 0 means hardware concurrency.
void set_threads(int n);
int threads();

// Runs body(i) for i in [0, n). Work is split into fixed blocks that do not
// depend on the worker count, so results written per index are reproducible.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

// Runs body(block, begin, end) over fixed-size blocks of [0, n).
void parallel_blocks(std::int64_t n, std::int64_t block,
                     const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& body);

// Engine for a given (seed, stream) pair; streams are independent of thread layout.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedu};
    return std::mt19937_64(seq);
}

}  // namespace qc
