#pragma once

#include <cstdint>
#include <random>

#include "hsrecon/types.hpp"

namespace hsrecon::detail {

/// Independent deterministic engines keyed by (seed, stream, index).
inline std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    // Column-major fill so the draw order is fixed.
    for (Index c = 0; c < cols; ++c) {
        for (Index r = 0; r < rows; ++r) m(r, c) = normal(engine);
    }
    return m;
}

}  // namespace hsrecon::detail
