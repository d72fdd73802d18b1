#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace avatar_sync {

/// Seeded 64-bit generator with a draw counter. Two generators are equal iff
/// they were seeded alike and have produced the same number of draws, which
/// makes the state cheap to compare and to snapshot.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t next() {
        ++draws_;
        return engine_();
    }

    /// Unbiased index in [0, n), n > 0.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index over an empty range");
        const std::uint64_t bound = n;
        // Reject the short top bucket so every residue is equally likely.
        const std::uint64_t rem = (UINT64_MAX % bound + 1) % bound;
        std::uint64_t x = next();
        while (rem != 0 && x > UINT64_MAX - rem) x = next();
        return static_cast<std::size_t>(x % bound);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draws() const { return draws_; }

    bool operator==(const SeededRng& o) const { return seed_ == o.seed_ && draws_ == o.draws_; }

private:
    std::uint64_t seed_;
    std::uint64_t draws_ = 0;
    std::mt19937_64 engine_;
};

}  // namespace avatar_sync
