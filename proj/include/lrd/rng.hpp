#pragma once

#include <cstdint>

namespace lrd {

// splitmix64 finalizer; used both as a standalone generator for seeding and
// as the stream-derivation hash.
inline std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with per-stream seeding.  Replica r of a simulation draws
// from stream(master_seed, r); distinct indices give statistically
// independent streams without any coordination between replicas.
class rng64 {
public:
    explicit rng64(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64_next(sm);
    }

    static rng64 stream(std::uint64_t master_seed, std::uint64_t index) noexcept {
        std::uint64_t sm = master_seed + (index + 1) * 0x9e3779b97f4a7c15ULL;
        return rng64(splitmix64_next(sm));
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform draw in [0, 1) with 53 random bits; never returns 1.0.
    double uniform01() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    using result_type = std::uint64_t;
    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return ~0ULL; }
    std::uint64_t operator()() noexcept { return next(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

}  // namespace lrd
