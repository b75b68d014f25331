#pragma once

#include "qforge/qec/decoder.hpp"
#include "qforge/qec/noise.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qforge::qec {

enum class GateKind : std::uint8_t {
    H,
    X,
    Z,
    CX,
    Measure,
    // Deliberate Pauli errors: they act on the frame only, never on the
    // ideal reference.
    InjectX,
    InjectY,
    InjectZ,
};

struct Gate {
    GateKind kind;
    std::vector<int> qubits;  ///< CX takes (control, target); others act per qubit
};

/// Clifford circuit on qubits initialised to |0>.
struct Circuit {
    int num_qubits = 0;
    std::vector<Gate> gates;

    /// Line format: `H 0 1`, `CX 0 1`, `M 0 1 2`, `X 0`, `Z 0`,
    /// `INJECT_X 0` (also _Y, _Z); `#` starts a comment. The qubit count is
    /// inferred from the largest index. Unknown gate names throw
    /// Error(unsupported_gate).
    static Circuit parse(std::string_view text);

    std::size_t num_measurements() const;
};

/// Outcome histogram keyed by bitstring; character i is measurement i.
using Histogram = std::map<std::string, std::uint64_t>;

/// Constant-oracle Deutsch-Jozsa on n qubits: H on all, identity oracle,
/// H on all, measure all. The ideal outcome is all zeros.
Circuit deutsch_jozsa_constant(int n);

/// Pauli-frame sampling. One ideal reference run comes from a stabilizer
/// tableau; each shot then propagates a Pauli frame through the circuit
/// with depolarizing noise of probability model.p after every gate location
/// and before every measurement. Measured bit = reference bit XOR frame X.
Histogram pauli_frame_simulate(const Circuit& circuit, const NoiseModel& model, std::size_t shots,
                               std::uint64_t seed);

/// XORs the X corrections into every bitstring; Z corrections do not
/// affect computational-basis readout. Throws Error(length_mismatch) when
/// a bitstring length differs from the correction length.
Histogram apply_corrections(const Histogram& counts, const CorrectionSet& corrections);

std::uint64_t total_shots(const Histogram& counts);

} // namespace qforge::qec
