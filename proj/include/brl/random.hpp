#pragma once

#include <cstdint>
#include <random>

namespace brl {

/// splitmix64 finalizer; turns any 64-bit value into a well-mixed seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream seed for (master, stream). Used to give every maze and
/// every run its own reproducible stream regardless of execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix_seed(master ^ mix_seed(stream));
}

/**
 * Seeded random stream. mt19937_64 output is fully specified by the
 * standard, so a seed pins the entire sequence; the derived draws below
 * avoid std::*_distribution, whose mapping is implementation-defined.
 *
 * Each run owns its private stream; Rng is never shared across threads.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), n > 0. Modulo bias is ~n/2^64.
    int uniform_int(int n) {
        return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 engine_;
};

} // namespace brl
