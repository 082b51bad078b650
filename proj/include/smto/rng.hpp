#pragma once

#include "smto/common.hpp"

#include <cstdint>

namespace smto {

/// splitmix64 step; the workhorse behind all randomness in this library.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= tag * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
    std::uint64_t b = splitmix64(s);
    s ^= index + 0x100000001b3ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b + (c << 1));
}

/// Counter-style random stream. Each consumer derives its own stream from
/// (seed, tag, index), so batches are reproducible regardless of scheduling.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {
        // burn-in decorrelates trivially related seeds
        splitmix64(state_);
        splitmix64(state_);
    }

    static RandomStream for_index(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
        return RandomStream(mix_seed(seed, tag, index));
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_index(int n) {
        int i = static_cast<int>(uniform() * static_cast<double>(n));
        return i >= n ? n - 1 : i;
    }

    /// Standard normal via Box-Muller (with spare caching).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    VecX normal_vector(int n) {
        VecX v(n);
        for (int i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace smto
