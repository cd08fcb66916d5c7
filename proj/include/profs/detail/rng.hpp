#pragma once

#include <cstdint>

// Counter-based random stream: the k-th output is a pure function of
// (key, k), so draws are reproducible independently of execution order.
// The output sequence is splitmix64 started from a hashed key.

namespace profs::detail {

class CounterRng {
public:
    explicit CounterRng(std::uint64_t k0, std::uint64_t k1 = 0,
                        std::uint64_t k2 = 0, std::uint64_t k3 = 0) {
        std::uint64_t h = mix(k0 + kGamma);
        h = mix(h ^ (k1 + 0x8BB84B93962EEFCDull));
        h = mix(h ^ (k2 + 0xA24BAED4963EE407ull));
        h = mix(h ^ (k3 + 0x9FB21C651E98DF25ull));
        state_ = h;
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    // Uniform in the open interval (0, 1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Unit-rate exponential.
    double next_exponential();

    // Standard normal via inverse-CDF (one uniform per draw).
    double next_normal();

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
    std::uint64_t state_;
};

}  // namespace profs::detail
