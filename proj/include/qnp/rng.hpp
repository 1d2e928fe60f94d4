#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace qnp {

// splitmix64; used to derive independent stream seeds from a master seed.
inline uint64_t hash_mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t h = hash_mix(master);
    h = hash_mix(h ^ a);
    h = hash_mix(h ^ b);
    h = hash_mix(h ^ c);
    return h;
}

/// Deterministic random stream. Wraps mt19937_64 with hand-rolled
/// conversions so sampled values do not depend on libstdc++'s
/// distribution implementations.
class Rng {
public:
    Rng() : engine_(0) {}
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        // rejection sampling, unbiased
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // number of the first successful trial, k >= 1, P(k) = (1-p)^(k-1) p
    uint64_t geometric(double p);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

inline uint64_t Rng::geometric(double p) {
    if (p >= 1.0) return 1;
    // inverse CDF; ceil(log(1-u)/log(1-p)) with u in [0,1)
    double u = uniform();
    double k = std::log1p(-u) / std::log1p(-p);
    uint64_t n = static_cast<uint64_t>(k) + 1;
    return n;
}

}  // namespace qnp
