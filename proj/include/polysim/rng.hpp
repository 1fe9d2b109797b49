#pragma once

#include <cmath>
#include <cstdint>

namespace polysim {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Mixes a master seed with per-stream indices into an independent stream
/// seed. Used by the replication harness so results do not depend on
/// scheduling or worker count.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0xff51afd7ed558ccdULL;
    h ^= splitmix64(s);
    s ^= b * 0xc4ceb9fe1a85ec53ULL;
    h ^= splitmix64(s);
    std::uint64_t t = h;
    return splitmix64(t);
}

/// xoshiro256++ — small, fast generator with a 256-bit state, seeded
/// through splitmix64 as its authors recommend. Sequences are identical
/// across platforms, which the determinism contract relies on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log argument.
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection keeps the draw unbiased.
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Exact Binomial(n, p) draw. O(n) in general; p = 1/2 uses popcounts
    /// on raw words so large symmetric splits stay cheap.
    std::uint64_t binomial(std::uint64_t n, double p) {
        if (n == 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        if (p == 0.5) {
            std::uint64_t count = 0;
            std::uint64_t remaining = n;
            while (remaining >= 64) {
                count += static_cast<std::uint64_t>(__builtin_popcountll(next_u64()));
                remaining -= 64;
            }
            if (remaining > 0) {
                const std::uint64_t mask = (remaining == 64) ? ~0ULL : ((1ULL << remaining) - 1);
                count += static_cast<std::uint64_t>(__builtin_popcountll(next_u64() & mask));
            }
            return count;
        }
        std::uint64_t count = 0;
        for (std::uint64_t i = 0; i < n; ++i) count += bernoulli(p) ? 1 : 0;
        return count;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace polysim
