#include "qforge/qec/estimator.hpp"

#include "qforge/error.hpp"
#include "qforge/parallel.hpp"
#include "qforge/qec/decoder.hpp"

#include <cmath>

namespace qforge::qec {

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    // The exact endpoints at 0 and n successes would otherwise carry rounding residue.
    return {successes == 0 ? 0.0 : std::max(0.0, center - half), successes == trials ? 1.0 : std::min(1.0, center + half)};
}

LogicalErrorEstimate logical_error_rate(int d, const NoiseModel& model, std::size_t rounds, std::size_t trials,
                                        std::uint64_t seed, EstimatorOptions options) {
    model.validate();
    if (trials == 0 || rounds == 0) throw Error(ErrorCode::invalid_params, "trials and rounds must be >= 1");
    const auto config = make_decoder_config(build_layout(d));
    const auto& layout = *config.layout;

    enum : std::uint8_t { ok = 0, failed = 1, decode_error = 2, fallback = 4 };
    std::vector<std::uint8_t> outcome(trials, ok);

    const std::size_t threads = options.threads ? options.threads : default_concurrency();
    const std::size_t block = 256;
    const std::size_t blocks = (trials + block - 1) / block;
    parallel_for(blocks, threads, [&](std::size_t b) {
        for (std::size_t t = b * block; t < std::min(trials, (b + 1) * block); ++t) {
            auto rng = Rng::substream(seed, "qec.logical_error_rate", t);
            auto error = ErrorState::clean(layout.num_data());
            SyndromeHistory history;
            history.rounds.reserve(rounds + 1);
            for (std::size_t r = 0; r < rounds; ++r) {
                error = apply_depolarizing(std::move(error), model.p, rng);
                history.rounds.push_back(measure_syndromes(error, layout, model.q, rng));
            }
            history.rounds.push_back(true_syndrome(error, layout));
            try {
                const auto correction = decode(history, config);
                std::uint8_t flags = correction.used_fallback ? fallback : ok;
                if (is_logical_failure(residual(error, correction), layout)) flags |= failed;
                outcome[t] = flags;
            } catch (const Error&) {
                outcome[t] = failed | decode_error;
            }
        }
    });

    LogicalErrorEstimate est;
    est.distance = d;
    est.noise = model;
    est.rounds = rounds;
    est.trials = trials;
    for (auto o : outcome) {
        est.failures += (o & failed) ? 1 : 0;
        est.decode_errors += (o & decode_error) ? 1 : 0;
        est.fallback_trials += (o & fallback) ? 1 : 0;
    }
    est.estimate = static_cast<double>(est.failures) / static_cast<double>(trials);
    est.ci = wilson_interval(est.failures, trials);
    return est;
}

} // namespace qforge::qec
