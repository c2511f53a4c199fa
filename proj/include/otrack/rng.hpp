// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace otrack {

/// Counter-based pseudo random generator.
///
/// Every draw is `mix(key + counter * kGolden)` where `mix` is the SplitMix64
/// finalizer and `key = mix(seed)`. Outputs depend only on (seed, counter), so
/// streams are reproducible across platforms and compilers. Normal variates
/// use Box-Muller on two consecutive uniforms. `fork(n)` derives an
/// independent stream keyed by (seed, n).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [lo, hi] (inclusive), unbiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    double normal(double mean = 0.0, double stddev = 1.0);
    bool bernoulli(double p);
    int poisson(double mean);

    Rng fork(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace otrack
