#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kgrag/errors.hpp"

namespace kgrag {

/// Deterministic random source. mt19937_64 has a standard-mandated output
/// sequence, and all derived draws below avoid std::*_distribution (whose
/// algorithms are implementation-defined), so a seed reproduces the same
/// stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [lo, hi), 53-bit resolution.
    double uniform_real(double lo, double hi) {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    /// Uniform integer in [0, n), n > 0. Rejection-sampled, unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) raise("invalid-argument", "uniform_int over an empty range");
        std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x < threshold);
        return x % n;
    }

    bool coin() { return (next_u64() >> 63) != 0; }

    /// Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace kgrag
