#pragma once

// Seeded sampling helpers. std::mt19937_64 output is fixed by the standard;
// the distributions here are spelled out so results do not depend on the
// standard library's distribution implementations.

#include <cstdint>
#include <random>

#include "phmmw/alphabet.hpp"

namespace phmmw {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi].
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) return engine_();
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t r = engine_();
        while (r >= limit) r = engine_();
        return lo + r % span;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Residue index drawn from the (normalized) distribution p.
    int residue(const ResidueVector& p) {
        double u = uniform();
        for (int a = 0; a < kAlphabetSize - 1; ++a) {
            if (u < p[a]) return a;
            u -= p[a];
        }
        return kAlphabetSize - 1;
    }

    int uniform_residue() { return static_cast<int>(uniform_int(0, kAlphabetSize - 1)); }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace phmmw
