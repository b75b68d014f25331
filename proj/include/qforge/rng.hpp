#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace qforge {

/// Seeded random stream. All randomness in the project is drawn from one
/// root seed through named substreams, so results never depend on call
/// order across modules or on thread scheduling.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for (root seed, purpose name, index).
    static Rng substream(std::uint64_t root, std::string_view name, std::uint64_t index = 0);

    static constexpr result_type min() { return std::numeric_limits<result_type>::min(); }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t root, std::string_view name, std::uint64_t index);

} // namespace qforge
