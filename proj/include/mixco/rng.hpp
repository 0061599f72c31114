#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mixco {

/// Deterministic random stream.
///
/// Algorithm: xoshiro256** (Blackman & Vigna), state seeded by four
/// successive outputs of splitmix64 starting from the user seed. Derived
/// distributions are implemented here rather than through <random> so the
/// stream is identical across standard libraries:
///
///   uniform()       (next() >> 11) * 2^-53, in [0, 1)
///   uniform_open()  uniform() redrawn while it equals 0, in (0, 1)
///   normal()        Box-Muller on (uniform_open(), uniform()), cosine branch;
///                   exactly two uniforms per normal, nothing cached
///   below(n)        rejection sampling on the top bits, unbiased
///   permutation(n)  Fisher-Yates from the last index down, using below()
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Independent stream for a named purpose, e.g. derive(seed, "augment").
    static Rng derive(std::uint64_t seed, std::string_view purpose);

    std::uint64_t next();
    double uniform();
    double uniform_open();
    double uniform(double lo, double hi);
    double normal();
    double normal(double mean, double stddev);
    std::uint64_t below(std::uint64_t n);
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace mixco
