#include "qforge/qec/topology.hpp"

#include "qforge/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <map>
#include <set>

namespace qforge::qec {

DeviceTopology DeviceTopology::from_json(const nlohmann::json& j) {
    DeviceTopology t;
    try {
        for (const auto& q : j.at("qubits")) {
            t.qubits.push_back({q.at("id").get<int>(), q.at("x").get<double>(), q.at("y").get<double>()});
        }
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::invalid_config, "edge must be a pair of ids");
            t.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::invalid_config, std::string("malformed topology: ") + ex.what());
    }
    return t;
}

DeviceTopology DeviceTopology::grid(int width, int height) {
    DeviceTopology t;
    auto id = [width](int x, int y) { return y * width + x; };
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            t.qubits.push_back({id(x, y), static_cast<double>(x), static_cast<double>(y)});
            if (x + 1 < width) t.edges.emplace_back(id(x, y), id(x + 1, y));
            if (y + 1 < height) t.edges.emplace_back(id(x, y), id(x, y + 1));
        }
    }
    return t;
}

DeviceTopology DeviceTopology::chain(int length) {
    DeviceTopology t;
    for (int i = 0; i < length; ++i) {
        t.qubits.push_back({i, static_cast<double>(i), 0.0});
        if (i + 1 < length) t.edges.emplace_back(i, i + 1);
    }
    return t;
}

namespace {

using Point = std::pair<int, int>;

// Lattice-local coordinates: data (r, c) -> (r + c, r - c); plaquette with
// corner (r, c) -> (r + c + 1, r - c). Each corner is then one grid step from
// its plaquette centre.
Point data_point(const DataQubit& q) { return {q.row + q.col, q.row - q.col}; }
Point check_point(const Stabilizer& s) { return {s.face_row + s.face_col + 1, s.face_row - s.face_col}; }

Point transform(Point p, int symmetry) {
    auto [u, v] = p;
    if (symmetry & 4) std::swap(u, v);
    if (symmetry & 1) u = -u;
    if (symmetry & 2) v = -v;
    return {u, v};
}

struct Device {
    std::map<Point, int> by_point;
    std::set<std::pair<int, int>> couplings;
    int min_x = INT_MAX, max_x = INT_MIN, min_y = INT_MAX, max_y = INT_MIN;

    explicit Device(const DeviceTopology& t) {
        for (const auto& q : t.qubits) {
            const double rx = std::round(q.x);
            const double ry = std::round(q.y);
            if (std::abs(rx - q.x) > 1e-9 || std::abs(ry - q.y) > 1e-9) continue;  // off-grid qubits cannot host the lattice
            const Point p{static_cast<int>(rx), static_cast<int>(ry)};
            by_point.emplace(p, q.id);
            min_x = std::min(min_x, p.first);
            max_x = std::max(max_x, p.first);
            min_y = std::min(min_y, p.second);
            max_y = std::max(max_y, p.second);
        }
        for (auto [a, b] : t.edges) {
            couplings.emplace(std::min(a, b), std::max(a, b));
        }
    }

    bool empty() const { return by_point.empty(); }
    bool coupled(int a, int b) const { return couplings.count({std::min(a, b), std::max(a, b)}) > 0; }
    int at(Point p) const {
        auto it = by_point.find(p);
        return it == by_point.end() ? -1 : it->second;
    }
};

std::optional<DeviceEmbedding> try_place(const Device& device, const SurfaceCodeLayout& layout, int symmetry,
                                         Point offset) {
    auto place = [&](Point local) {
        const auto p = transform(local, symmetry);
        return device.at({p.first + offset.first, p.second + offset.second});
    };
    DeviceEmbedding e;
    for (const auto& q : layout.data_qubits) {
        const int id = place(data_point(q));
        if (id < 0) return std::nullopt;
        e.data_to_device.push_back(id);
    }
    auto place_checks = [&](const std::vector<Stabilizer>& checks, std::vector<int>& out) {
        for (const auto& s : checks) {
            const int id = place(check_point(s));
            if (id < 0) return false;
            for (auto q : s.support) {
                if (!device.coupled(id, e.data_to_device[q])) return false;
            }
            out.push_back(id);
        }
        return true;
    };
    if (!place_checks(layout.x_stabilizers, e.x_ancilla_to_device)) return std::nullopt;
    if (!place_checks(layout.z_stabilizers, e.z_ancilla_to_device)) return std::nullopt;
    return e;
}

} // namespace

std::optional<DeviceEmbedding> find_embedding(const DeviceTopology& topology, int d) {
    const Device device(topology);
    if (device.empty()) return std::nullopt;
    const auto layout = build_layout(d);

    for (int symmetry = 0; symmetry < 8; ++symmetry) {
        int min_u = INT_MAX, min_v = INT_MAX, max_u = INT_MIN, max_v = INT_MIN;
        auto extend = [&](Point local) {
            const auto p = transform(local, symmetry);
            min_u = std::min(min_u, p.first);
            max_u = std::max(max_u, p.first);
            min_v = std::min(min_v, p.second);
            max_v = std::max(max_v, p.second);
        };
        for (const auto& q : layout.data_qubits) extend(data_point(q));
        for (const auto& s : layout.x_stabilizers) extend(check_point(s));
        for (const auto& s : layout.z_stabilizers) extend(check_point(s));

        for (int oy = device.min_y - min_v; oy + max_v <= device.max_y; ++oy) {
            for (int ox = device.min_x - min_u; ox + max_u <= device.max_x; ++ox) {
                if (auto e = try_place(device, layout, symmetry, {ox, oy})) return e;
            }
        }
    }
    return std::nullopt;
}

DecoderConfig generate_decoder_for_topology(const DeviceTopology& topology) {
    const Device device(topology);
    if (!device.empty()) {
        const int span = std::min(device.max_x - device.min_x, device.max_y - device.min_y) + 1;
        // A distance-d layout spans 2d - 1 sites along each axis.
        int d = (span + 1) / 2;
        if (d % 2 == 0) --d;
        for (; d >= 3; d -= 2) {
            if (auto e = find_embedding(topology, d)) {
                auto config = make_decoder_config(build_layout(d));
                config.embedding = std::move(e);
                return config;
            }
        }
    }
    throw Error(ErrorCode::topology_unsupported,
                "no distance >= 3 rotated surface code embeds in the declared topology "
                "(a fully connected 2-D lattice region is required)");
}

} // namespace qforge::qec
