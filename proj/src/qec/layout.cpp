#include "qforge/qec/layout.hpp"

#include "qforge/error.hpp"

#include <algorithm>
#include <string>

namespace qforge::qec {

SurfaceCodeLayout build_layout(int d) {
    if (d < 3 || d % 2 == 0) {
        throw Error(ErrorCode::invalid_distance, "distance must be odd and >= 3, got " + std::to_string(d));
    }
    SurfaceCodeLayout layout;
    layout.distance = d;
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) layout.data_qubits.push_back({r, c});
    }

    auto inside = [d](int r, int c) { return r >= 0 && r < d && c >= 0 && c < d; };

    // Checkerboard over plaquettes: (r + c) even is X-type. Boundary
    // plaquettes survive only on the edges matching their type.
    for (int r = -1; r < d; ++r) {
        for (int c = -1; c < d; ++c) {
            const bool x_type = ((r + c) % 2 + 2) % 2 == 0;
            const bool top_or_bottom = (r == -1 || r == d - 1) && c >= 0 && c < d - 1;
            const bool left_or_right = (c == -1 || c == d - 1) && r >= 0 && r < d - 1;
            const bool bulk = r >= 0 && r < d - 1 && c >= 0 && c < d - 1;
            if (!bulk && !(x_type && top_or_bottom) && !(!x_type && left_or_right)) continue;

            Stabilizer s{x_type ? PauliType::X : PauliType::Z, r, c, {}};
            for (int dr = 0; dr <= 1; ++dr) {
                for (int dc = 0; dc <= 1; ++dc) {
                    if (inside(r + dr, c + dc)) s.support.push_back(layout.data_index(r + dr, c + dc));
                }
            }
            (x_type ? layout.x_stabilizers : layout.z_stabilizers).push_back(std::move(s));
        }
    }

    for (int r = 0; r < d; ++r) layout.logical_x.push_back(layout.data_index(r, 0));
    for (int c = 0; c < d; ++c) layout.logical_z.push_back(layout.data_index(0, c));
    return layout;
}

std::size_t overlap(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t n = 0;
    for (auto q : a) n += static_cast<std::size_t>(std::count(b.begin(), b.end(), q));
    return n;
}

} // namespace qforge::qec
