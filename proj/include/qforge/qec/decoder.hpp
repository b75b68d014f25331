#pragma once

#include "qforge/qec/layout.hpp"
#include "qforge/qec/noise.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace qforge::qec {

/// Measured rounds in order. The final round is expected to be noiseless
/// when every physical error must yield an even number of detection events.
struct SyndromeHistory {
    std::vector<Syndrome> rounds;
};

/// A detection event: stabilizer `check` changed between round-1 and round
/// (round 0 is compared against the all-zero reference).
struct DetectionEvent {
    std::size_t round;
    std::size_t check;
};

struct DetectionEvents {
    std::vector<DetectionEvent> x_checks;  ///< events of X-type checks (locate Z errors)
    std::vector<DetectionEvent> z_checks;  ///< events of Z-type checks (locate X errors)
};

/// Throws Error(inconsistent_history) when a round does not match the layout.
DetectionEvents detection_events(const SyndromeHistory& history, const SurfaceCodeLayout& layout);

/// Graph of one check type: checks are nodes, each data qubit is an edge
/// between the (at most two) checks of that type containing it, or between a
/// check and a virtual boundary node. Shortest paths are precomputed.
class CheckGraph {
public:
    CheckGraph(const SurfaceCodeLayout& layout, PauliType check_type);

    std::size_t num_checks() const { return num_checks_; }
    std::size_t num_boundaries() const { return num_boundaries_; }

    /// Lattice steps between two checks without crossing a boundary.
    int hops(std::size_t a, std::size_t b) const { return hops_[a][b]; }
    /// Lattice steps from a check to its nearest boundary node.
    int boundary_hops(std::size_t a) const { return boundary_hops_[a]; }

    const std::vector<std::size_t>& path(std::size_t a, std::size_t b) const { return paths_[a][b]; }
    const std::vector<std::size_t>& boundary_path(std::size_t a) const { return boundary_paths_[a]; }

    struct Edge {
        std::size_t a;
        std::size_t b;  ///< >= num_checks() for a boundary node
        std::size_t qubit;
    };
    const std::vector<Edge>& edges() const { return edges_; }

private:
    std::size_t num_checks_ = 0;
    std::size_t num_boundaries_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> hops_;
    std::vector<std::vector<std::vector<std::size_t>>> paths_;
    std::vector<int> boundary_hops_;
    std::vector<std::vector<std::size_t>> boundary_paths_;
};

/// Where each code qubit lives on a physical device.
struct DeviceEmbedding {
    std::vector<int> data_to_device;
    std::vector<int> x_ancilla_to_device;
    std::vector<int> z_ancilla_to_device;
};

struct DecoderConfig {
    std::shared_ptr<const SurfaceCodeLayout> layout;
    int space_weight = 1;
    int time_weight = 1;
    /// Largest defect count per graph solved by the exact matcher.
    std::size_t exact_defect_limit = 16;
    /// Beyond the limit: greedy nearest-pair matching when true, otherwise
    /// Error(too_many_defects).
    bool greedy_fallback = true;
    std::optional<DeviceEmbedding> embedding;

    /// Graph whose checks locate errors of `error_type` (Z-type checks for X errors).
    const CheckGraph& graph_for_errors(PauliType error_type) const {
        return error_type == PauliType::X ? *z_check_graph : *x_check_graph;
    }

    std::shared_ptr<const CheckGraph> x_check_graph;
    std::shared_ptr<const CheckGraph> z_check_graph;
};

/// Throws Error(invalid_params) for non-positive weights.
DecoderConfig make_decoder_config(SurfaceCodeLayout layout, int space_weight = 1, int time_weight = 1);

struct CorrectionSet {
    BitVector x_corrections;
    BitVector z_corrections;
    int matching_weight = 0;     ///< total weight over both graphs
    bool used_fallback = false;  ///< greedy matching replaced the exact matcher

    static CorrectionSet empty(std::size_t num_qubits) {
        return {BitVector(num_qubits, 0), BitVector(num_qubits, 0), 0, false};
    }
};

/// Partner of a matched defect: another defect index or the boundary.
struct MatchedPair {
    std::size_t first;
    std::optional<std::size_t> second;  ///< empty means matched to the boundary
};

struct Matching {
    std::vector<MatchedPair> pairs;
    int weight = 0;
    bool used_fallback = false;
};

/// Minimum-weight perfect matching of defects (each matched to another
/// defect or to the boundary). `distance(i, j)` and `boundary(i)` give edge
/// weights. Among equal-weight matchings the lexicographically smallest
/// sorted pair list wins, with the boundary ordered after every defect.
Matching match_defects(std::size_t count, const std::vector<std::vector<int>>& distance,
                       const std::vector<int>& boundary, std::size_t exact_limit, bool greedy_fallback);

/// Space-time minimum-weight matching decode. X and Z errors are decoded
/// independently; time-like matches contribute no data correction.
CorrectionSet decode(const SyndromeHistory& history, const DecoderConfig& config);

/// Whether the residual Pauli frame flips the encoded qubit.
bool is_logical_failure(const ErrorState& residual, const SurfaceCodeLayout& layout);

/// error XOR correction.
ErrorState residual(const ErrorState& error, const CorrectionSet& correction);

} // namespace qforge::qec
