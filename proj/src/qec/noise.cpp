#include "qforge/qec/noise.hpp"

#include "qforge/error.hpp"

namespace qforge::qec {

void NoiseModel::validate() const {
    if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0)) {
        throw Error(ErrorCode::invalid_params, "noise probabilities must lie in [0, 1]");
    }
}

ErrorState apply_depolarizing(ErrorState state, double p, Rng& rng) {
    if (p <= 0.0) return state;
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (!rng.bernoulli(p)) continue;
        switch (rng.below(3)) {
            case 0: state.x_errors[i] ^= 1; break;
            case 1: state.x_errors[i] ^= 1; state.z_errors[i] ^= 1; break;
            default: state.z_errors[i] ^= 1; break;
        }
    }
    return state;
}

namespace {

BitVector parities(const std::vector<Stabilizer>& checks, const BitVector& errors) {
    BitVector out(checks.size(), 0);
    for (std::size_t i = 0; i < checks.size(); ++i) {
        std::uint8_t parity = 0;
        for (auto q : checks[i].support) parity ^= errors[q];
        out[i] = parity;
    }
    return out;
}

} // namespace

Syndrome true_syndrome(const ErrorState& state, const SurfaceCodeLayout& layout) {
    // X-type checks anticommute with Z errors and vice versa.
    return {parities(layout.x_stabilizers, state.z_errors), parities(layout.z_stabilizers, state.x_errors)};
}

Syndrome measure_syndromes(const ErrorState& state, const SurfaceCodeLayout& layout, double q, Rng& rng) {
    Syndrome s = true_syndrome(state, layout);
    if (q > 0.0) {
        for (auto& bit : s.x_checks) bit ^= rng.bernoulli(q) ? 1 : 0;
        for (auto& bit : s.z_checks) bit ^= rng.bernoulli(q) ? 1 : 0;
    }
    return s;
}

} // namespace qforge::qec
