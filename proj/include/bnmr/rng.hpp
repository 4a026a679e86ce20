#pragma once

#include <cstdint>
#include <random>

namespace bnmr {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream_id). Replicates and CV folds each get
/// their own stream so results do not depend on scheduling order.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream_id = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
    return Rng(seq);
}

}  // namespace bnmr
