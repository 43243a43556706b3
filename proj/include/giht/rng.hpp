#pragma once

// Portable seeded random streams.
//
// The engine is std::mt19937_64 seeded through std::seed_seq with the four
// 32-bit words (seed_lo, seed_hi, stream_lo, stream_hi). Both the engine and
// seed_seq are fully specified by the standard, so a (seed, stream) pair yields
// the same sequence on every conforming implementation. The library's own
// distribution transforms below replace std::*_distribution, whose output is
// implementation-defined.

#include "giht/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace giht {

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound), unbiased by rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw InvalidArgument("Rng::below: bound must be positive");
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

    Vector normal_vector(Index size) {
        Vector out(size);
        for (Index i = 0; i < size; ++i) out[i] = normal();
        return out;
    }

    /// `count` distinct values from [0, population), in ascending order.
    std::vector<Index> sample_without_replacement(Index population, Index count) {
        if (count < 0 || count > population)
            throw InvalidArgument("sample_without_replacement: count out of range");
        std::vector<Index> pool(static_cast<std::size_t>(population));
        std::iota(pool.begin(), pool.end(), Index{0});
        // partial Fisher-Yates
        for (Index i = 0; i < count; ++i) {
            const auto j = i + static_cast<Index>(below(static_cast<std::uint64_t>(population - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(count));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derive a child seed from (seed, stream). Used to hand independent seeds to
/// experiment trials so that results do not depend on execution order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return Rng(seed, stream).next_u64();
}

} // namespace giht
