#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace flowconf {

// Seeded random stream. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; every conversion below is written out explicitly
// (the <random> distributions are implementation-defined) so that streams
// reproduce bit-for-bit across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via the polar Box-Muller method; caches the spare draw.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t fnv1a64(std::string_view bytes);

/// Child seed for a named sub-stream. Adding new names never perturbs
/// the seeds handed out for existing ones.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);

std::uint64_t derive_seed(std::uint64_t parent, std::int64_t a, std::int64_t b);

}  // namespace flowconf
