#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace mixnet {

// Seed derivation for independent sub-streams (per cell, per fold, per
// learner, ...). Mixing is splitmix64-based so derived seeds are stable
// across platforms and runs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt);

// Deterministic random source. All draws are implemented on top of raw
// mt19937_64 output so the produced streams do not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Uniform on [lo, hi).
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller.
    double normal();

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    // Draws an index proportionally to the given non-negative weights.
    std::size_t pick(std::span<const double> weights);

    // Sample of k distinct indices from [0, n), returned in ascending order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    // Independent stream derived from this rng's seed; unaffected by draws
    // already made here.
    Rng child(std::uint64_t salt) const { return Rng(mix_seed(seed_, salt)); }
    Rng child(std::string_view salt) const { return Rng(mix_seed(seed_, salt)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mixnet
