#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lpn {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes a textual label into a seed so that sub-streams ("secret", "data",
// "init", ...) derived from one experiment seed are independent.
inline uint64_t derive_seed(uint64_t seed, std::string_view label) {
    uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (char c : label) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
    uint64_t h = seed ^ (0x9e3779b97f4a7c15ULL + index);
    return splitmix64(h);
}

// Seeded random stream. All draws go through explicit helpers instead of
// std distributions so that a given seed produces the same bytes on every
// standard library. split() derives from the original seed, not the current
// stream position, so sub-streams are reproducible in isolation.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {
        uint64_t s = seed;
        gen_.seed(splitmix64(s));
    }

    uint64_t seed() const { return seed_; }

    Rng split(std::string_view label) const { return Rng(derive_seed(seed_, label)); }
    Rng split(std::string_view label, uint64_t index) const {
        return Rng(derive_seed(derive_seed(seed_, label), index));
    }

    uint64_t next_u64() { return gen_(); }

    // Unbiased uniform draw from [0, n) by rejection.
    uint64_t below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // 53-bit uniform double in [0, 1).
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform on (-bound, +bound).
    double uniform_pm(double bound) { return (2.0 * next_double() - 1.0) * bound; }

private:
    uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace lpn
