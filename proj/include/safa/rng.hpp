#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace safa {

// Named, per-purpose RNG streams. Every stream seed is derived from the
// master seed plus a purpose tag and optional coordinates (round, client,
// trial...), so any single draw is reproducible in isolation and streams
// never alias across purposes.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t h, uint64_t v) {
    return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline uint64_t hash_str(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV offset basis
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// derive_seed(master, "crash", t, k) -> stable uint64 seed
template <typename... Coords>
uint64_t derive_seed(uint64_t master, std::string_view purpose, Coords... coords) {
    uint64_t h = splitmix64(master);
    h = hash_combine(h, hash_str(purpose));
    ((h = hash_combine(h, static_cast<uint64_t>(coords))), ...);
    return h;
}

// Thin wrapper over mt19937_64 with hand-rolled distributions; std::
// distributions are implementation-defined, these are not.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    uint64_t below(uint64_t n) {
        // rejection sampling keeps this unbiased
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    double exponential(double lambda) {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return -std::log(u) / lambda;
    }

    // Box-Muller; one value per call, the pair's twin is discarded
    double normal(double mean, double stddev) {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
        return mean + stddev * z;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace safa
