#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qforge::qec {

enum class PauliType : std::uint8_t { X, Z };

struct DataQubit {
    int row;
    int col;
};

/// A parity check on the rotated lattice. The check sits on the plaquette
/// whose top-left corner is data site (face_row, face_col); boundary
/// plaquettes hang off the lattice edge and keep only two corners.
struct Stabilizer {
    PauliType type;
    int face_row;
    int face_col;
    std::vector<std::size_t> support;
};

/// Rotated surface code of odd distance d: d*d data qubits, (d*d-1)/2
/// checks of each type. X-type boundary checks sit on the top and bottom
/// edges, Z-type on the left and right. logical_x is the first column,
/// logical_z the first row.
struct SurfaceCodeLayout {
    int distance = 0;
    std::vector<DataQubit> data_qubits;
    std::vector<Stabilizer> x_stabilizers;
    std::vector<Stabilizer> z_stabilizers;
    std::vector<std::size_t> logical_x;
    std::vector<std::size_t> logical_z;

    std::size_t num_data() const { return data_qubits.size(); }
    std::size_t data_index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(distance) + static_cast<std::size_t>(col);
    }
    const std::vector<Stabilizer>& stabilizers(PauliType type) const {
        return type == PauliType::X ? x_stabilizers : z_stabilizers;
    }
};

/// Throws Error(invalid_distance) unless d is odd and at least 3.
SurfaceCodeLayout build_layout(int d);

/// Number of qubits in both supports.
std::size_t overlap(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

} // namespace qforge::qec
