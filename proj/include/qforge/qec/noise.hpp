#pragma once

#include "qforge/qec/layout.hpp"
#include "qforge/rng.hpp"

#include <cstdint>
#include <vector>

namespace qforge::qec {

using BitVector = std::vector<std::uint8_t>;

/// Pauli frame over the data qubits. Y is represented by both bits set.
struct ErrorState {
    BitVector x_errors;
    BitVector z_errors;

    static ErrorState clean(std::size_t num_qubits) { return {BitVector(num_qubits, 0), BitVector(num_qubits, 0)}; }
    std::size_t size() const { return x_errors.size(); }
};

struct NoiseModel {
    double p = 0.0;  ///< depolarizing probability per data qubit per round
    double q = 0.0;  ///< syndrome readout flip probability

    /// Throws Error(invalid_params) when either probability is outside [0, 1].
    void validate() const;
};

/// One round of readout. x_checks[i] is the outcome of layout.x_stabilizers[i]
/// (which detect Z errors); z_checks likewise for the Z-type checks.
struct Syndrome {
    BitVector x_checks;
    BitVector z_checks;
};

/// Independently per qubit: with probability p apply X, Y or Z (p/3 each).
ErrorState apply_depolarizing(ErrorState state, double p, Rng& rng);

/// True parity of anticommuting errors on each check, then each reported bit
/// flipped independently with probability q.
Syndrome measure_syndromes(const ErrorState& state, const SurfaceCodeLayout& layout, double q, Rng& rng);

/// Noiseless readout.
Syndrome true_syndrome(const ErrorState& state, const SurfaceCodeLayout& layout);

} // namespace qforge::qec
