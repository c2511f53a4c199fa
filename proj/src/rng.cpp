// SPDX-License-Identifier: Apache-2.0
#include "otrack/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace otrack {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), key_(splitmix64_mix(seed + kGolden)) {}

std::uint64_t Rng::next_u64() {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGolden);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) {
        throw std::invalid_argument("Rng::uniform_int: empty range");
    }
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) {
        return static_cast<std::int64_t>(next_u64());
    }
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
    std::uint64_t r = next_u64();
    while (r >= limit) {
        r = next_u64();
    }
    return lo + static_cast<std::int64_t>(r % span);
}

double Rng::normal(double mean, double stddev) {
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
}

bool Rng::bernoulli(double p) {
    return uniform() < p;
}

int Rng::poisson(double mean) {
    if (mean <= 0.0) {
        return 0;
    }
    // Knuth's multiplication method; means here are small.
    const double limit = std::exp(-mean);
    int k = 0;
    double prod = uniform();
    while (prod > limit) {
        ++k;
        prod *= uniform();
    }
    return k;
}

Rng Rng::fork(std::uint64_t stream) const {
    return Rng(splitmix64_mix(seed_ ^ splitmix64_mix(stream + 0x632BE59BD9B4E019ULL)));
}

}  // namespace otrack
