#pragma once

#include "qforge/qec/decoder.hpp"

#include <json.hpp>

#include <optional>
#include <utility>
#include <vector>

namespace qforge::qec {

struct DeviceQubit {
    int id;
    double x;
    double y;
};

/// Declared device: qubits at 2-D coordinates plus undirected couplings.
struct DeviceTopology {
    std::vector<DeviceQubit> qubits;
    std::vector<std::pair<int, int>> edges;

    /// Parses {"qubits": [{"id", "x", "y"}], "edges": [[a, b], ...]}.
    static DeviceTopology from_json(const nlohmann::json& j);

    static DeviceTopology grid(int width, int height);
    static DeviceTopology chain(int length);
};

/// Tries every translation and lattice symmetry for a distance-d rotated
/// layout. Qubits are placed on the integer grid rotated 45 degrees from the
/// lattice so each check's ancilla is a nearest neighbour of its data
/// qubits; every data-ancilla coupling must exist on the device.
std::optional<DeviceEmbedding> find_embedding(const DeviceTopology& topology, int d);

/// Largest odd d >= 3 that embeds, wrapped in a decoder config carrying the
/// embedding. Throws Error(topology_unsupported) when nothing embeds.
DecoderConfig generate_decoder_for_topology(const DeviceTopology& topology);

} // namespace qforge::qec
