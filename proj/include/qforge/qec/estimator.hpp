#pragma once

#include "qforge/qec/noise.hpp"

#include <cstddef>
#include <cstdint>

namespace qforge::qec {

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct LogicalErrorEstimate {
    int distance = 0;
    NoiseModel noise;
    std::size_t rounds = 0;
    std::size_t trials = 0;
    std::size_t failures = 0;       ///< includes decode errors
    std::size_t decode_errors = 0;  ///< trials whose decode threw
    std::size_t fallback_trials = 0;
    double estimate = 0.0;
    Interval ci;
};

struct EstimatorOptions {
    std::size_t threads = 0;  ///< 0 selects the hardware concurrency
};

/// Monte Carlo memory experiment. Each trial draws from its own substream
/// (seed, trial index): per round depolarize then read out with flip
/// probability q; one noiseless round closes the history; decode; count a
/// failure when the residual flips either logical operator.
LogicalErrorEstimate logical_error_rate(int d, const NoiseModel& model, std::size_t rounds, std::size_t trials,
                                        std::uint64_t seed, EstimatorOptions options = {});

} // namespace qforge::qec
