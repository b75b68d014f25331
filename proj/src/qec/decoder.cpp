#include "qforge/qec/decoder.hpp"

#include "qforge/error.hpp"

#include <algorithm>
#include <climits>
#include <deque>
#include <limits>
#include <string>

namespace qforge::qec {

DetectionEvents detection_events(const SyndromeHistory& history, const SurfaceCodeLayout& layout) {
    if (history.rounds.empty()) throw Error(ErrorCode::inconsistent_history, "history has no rounds");
    DetectionEvents events;
    const std::size_t nx = layout.x_stabilizers.size();
    const std::size_t nz = layout.z_stabilizers.size();
    BitVector prev_x(nx, 0);
    BitVector prev_z(nz, 0);
    for (std::size_t t = 0; t < history.rounds.size(); ++t) {
        const auto& round = history.rounds[t];
        if (round.x_checks.size() != nx || round.z_checks.size() != nz) {
            throw Error(ErrorCode::inconsistent_history,
                        "round " + std::to_string(t) + " does not match the layout's check counts");
        }
        for (std::size_t i = 0; i < nx; ++i) {
            if (round.x_checks[i] > 1) throw Error(ErrorCode::inconsistent_history, "syndrome bits must be 0 or 1");
            if (round.x_checks[i] != prev_x[i]) events.x_checks.push_back({t, i});
        }
        for (std::size_t i = 0; i < nz; ++i) {
            if (round.z_checks[i] > 1) throw Error(ErrorCode::inconsistent_history, "syndrome bits must be 0 or 1");
            if (round.z_checks[i] != prev_z[i]) events.z_checks.push_back({t, i});
        }
        prev_x = round.x_checks;
        prev_z = round.z_checks;
    }
    return events;
}

CheckGraph::CheckGraph(const SurfaceCodeLayout& layout, PauliType check_type) {
    const auto& checks = layout.stabilizers(check_type);
    num_checks_ = checks.size();
    num_boundaries_ = 2;

    std::vector<std::vector<std::size_t>> owners(layout.num_data());
    for (std::size_t s = 0; s < checks.size(); ++s) {
        for (auto q : checks[s].support) owners[q].push_back(s);
    }
    for (std::size_t q = 0; q < owners.size(); ++q) {
        if (owners[q].size() == 2) {
            edges_.push_back({owners[q][0], owners[q][1], q});
        } else if (owners[q].size() == 1) {
            // Z-type checks leave the top/bottom edges open, X-type the left/right.
            const auto& site = layout.data_qubits[q];
            const bool first_side = check_type == PauliType::Z ? site.row == 0 : site.col == 0;
            edges_.push_back({owners[q][0], num_checks_ + (first_side ? 0 : 1), q});
        }
    }

    const std::size_t nodes = num_checks_ + num_boundaries_;
    struct Neighbor {
        std::size_t node;
        std::size_t qubit;
    };
    std::vector<std::vector<Neighbor>> adjacency(nodes);
    for (const auto& e : edges_) {
        adjacency[e.a].push_back({e.b, e.qubit});
        adjacency[e.b].push_back({e.a, e.qubit});
    }
    for (auto& list : adjacency) {
        std::sort(list.begin(), list.end(), [](const Neighbor& l, const Neighbor& r) { return l.qubit < r.qubit; });
    }

    hops_.assign(num_checks_, std::vector<int>(num_checks_, INT_MAX));
    paths_.assign(num_checks_, std::vector<std::vector<std::size_t>>(num_checks_));
    boundary_hops_.assign(num_checks_, INT_MAX);
    boundary_paths_.assign(num_checks_, {});

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    for (std::size_t src = 0; src < num_checks_; ++src) {
        std::vector<int> dist(nodes, INT_MAX);
        std::vector<std::size_t> parent(nodes, none);
        std::vector<std::size_t> via(nodes, none);
        std::deque<std::size_t> frontier{src};
        dist[src] = 0;
        while (!frontier.empty()) {
            const auto u = frontier.front();
            frontier.pop_front();
            if (u >= num_checks_) continue;  // boundary nodes are sinks
            for (const auto& [v, qubit] : adjacency[u]) {
                if (dist[v] != INT_MAX) continue;
                dist[v] = dist[u] + 1;
                parent[v] = u;
                via[v] = qubit;
                frontier.push_back(v);
            }
        }
        auto trace = [&](std::size_t target) {
            std::vector<std::size_t> qubits;
            for (auto v = target; v != src; v = parent[v]) qubits.push_back(via[v]);
            std::reverse(qubits.begin(), qubits.end());
            return qubits;
        };
        for (std::size_t dst = 0; dst < num_checks_; ++dst) {
            hops_[src][dst] = dist[dst];
            if (dist[dst] != INT_MAX) paths_[src][dst] = trace(dst);
        }
        for (std::size_t b = num_checks_; b < nodes; ++b) {
            if (dist[b] < boundary_hops_[src]) {
                boundary_hops_[src] = dist[b];
                boundary_paths_[src] = trace(b);
            }
        }
    }
}

DecoderConfig make_decoder_config(SurfaceCodeLayout layout, int space_weight, int time_weight) {
    if (space_weight <= 0 || time_weight <= 0) {
        throw Error(ErrorCode::invalid_params, "matching weights must be positive");
    }
    DecoderConfig config;
    auto shared = std::make_shared<const SurfaceCodeLayout>(std::move(layout));
    config.x_check_graph = std::make_shared<const CheckGraph>(*shared, PauliType::X);
    config.z_check_graph = std::make_shared<const CheckGraph>(*shared, PauliType::Z);
    config.layout = std::move(shared);
    config.space_weight = space_weight;
    config.time_weight = time_weight;
    return config;
}

namespace {

Matching exact_matching(std::size_t n, const std::vector<std::vector<int>>& distance, const std::vector<int>& boundary) {
    const std::size_t full = (std::size_t{1} << n) - 1;
    constexpr int unreachable = INT_MAX / 4;
    std::vector<int> best(full + 1, unreachable);
    best[0] = 0;
    for (std::size_t mask = 1; mask <= full; ++mask) {
        const auto i = static_cast<std::size_t>(__builtin_ctzll(mask));
        const std::size_t rest = mask & ~(std::size_t{1} << i);
        int value = boundary[i] + best[rest];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!(rest >> j & 1)) continue;
            value = std::min(value, distance[i][j] + best[rest & ~(std::size_t{1} << j)]);
        }
        best[mask] = value;
    }

    // Reconstruct the lexicographically smallest optimal pairing: for the
    // lowest remaining defect try partners in ascending order, boundary last.
    Matching m;
    m.weight = best[full];
    std::size_t mask = full;
    while (mask) {
        const auto i = static_cast<std::size_t>(__builtin_ctzll(mask));
        const std::size_t rest = mask & ~(std::size_t{1} << i);
        bool paired = false;
        for (std::size_t j = i + 1; j < n && !paired; ++j) {
            if (!(rest >> j & 1)) continue;
            const std::size_t next = rest & ~(std::size_t{1} << j);
            if (distance[i][j] + best[next] == best[mask]) {
                m.pairs.push_back({i, j});
                mask = next;
                paired = true;
            }
        }
        if (!paired) {
            m.pairs.push_back({i, std::nullopt});
            mask = rest;
        }
    }
    return m;
}

Matching greedy_matching(std::size_t n, const std::vector<std::vector<int>>& distance, const std::vector<int>& boundary) {
    Matching m;
    m.used_fallback = true;
    std::vector<bool> open(n, true);
    std::size_t remaining = n;
    while (remaining > 0) {
        int best = INT_MAX;
        std::size_t bi = 0;
        std::optional<std::size_t> bj;
        for (std::size_t i = 0; i < n; ++i) {
            if (!open[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (open[j] && distance[i][j] < best) {
                    best = distance[i][j];
                    bi = i;
                    bj = j;
                }
            }
            if (boundary[i] < best) {
                best = boundary[i];
                bi = i;
                bj.reset();
            }
        }
        open[bi] = false;
        --remaining;
        if (bj) {
            open[*bj] = false;
            --remaining;
        }
        m.pairs.push_back({bi, bj});
        m.weight += best;
    }
    std::sort(m.pairs.begin(), m.pairs.end(), [](const MatchedPair& a, const MatchedPair& b) { return a.first < b.first; });
    return m;
}

} // namespace

Matching match_defects(std::size_t count, const std::vector<std::vector<int>>& distance,
                       const std::vector<int>& boundary, std::size_t exact_limit, bool greedy_fallback) {
    if (count == 0) return {};
    if (count > exact_limit || count > 30) {
        if (!greedy_fallback) {
            throw Error(ErrorCode::too_many_defects, std::to_string(count) + " defects exceed the exact matcher bound of " +
                                                         std::to_string(exact_limit));
        }
        return greedy_matching(count, distance, boundary);
    }
    return exact_matching(count, distance, boundary);
}

namespace {

void decode_graph(const std::vector<DetectionEvent>& events, const CheckGraph& graph, const DecoderConfig& config,
                  BitVector& corrections, CorrectionSet& out) {
    const std::size_t n = events.size();
    if (n == 0) return;
    std::vector<std::vector<int>> distance(n, std::vector<int>(n, 0));
    std::vector<int> boundary(n);
    for (std::size_t i = 0; i < n; ++i) {
        boundary[i] = config.space_weight * graph.boundary_hops(events[i].check);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto dt = events[i].round > events[j].round ? events[i].round - events[j].round
                                                              : events[j].round - events[i].round;
            const int w = config.space_weight * graph.hops(events[i].check, events[j].check) +
                          config.time_weight * static_cast<int>(dt);
            distance[i][j] = distance[j][i] = w;
        }
    }
    const auto matching = match_defects(n, distance, boundary, config.exact_defect_limit, config.greedy_fallback);
    out.matching_weight += matching.weight;
    out.used_fallback = out.used_fallback || matching.used_fallback;
    for (const auto& pair : matching.pairs) {
        const auto a = events[pair.first].check;
        const auto& qubits = pair.second ? graph.path(a, events[*pair.second].check) : graph.boundary_path(a);
        for (auto q : qubits) corrections[q] ^= 1;
    }
}

} // namespace

CorrectionSet decode(const SyndromeHistory& history, const DecoderConfig& config) {
    if (!config.layout || !config.x_check_graph || !config.z_check_graph) {
        throw Error(ErrorCode::inconsistent_history, "decoder config has no layout");
    }
    const auto& layout = *config.layout;
    const auto events = detection_events(history, layout);
    auto result = CorrectionSet::empty(layout.num_data());
    decode_graph(events.z_checks, *config.z_check_graph, config, result.x_corrections, result);
    decode_graph(events.x_checks, *config.x_check_graph, config, result.z_corrections, result);
    return result;
}

ErrorState residual(const ErrorState& error, const CorrectionSet& correction) {
    if (error.size() != correction.x_corrections.size() || error.size() != correction.z_corrections.size()) {
        throw Error(ErrorCode::length_mismatch, "correction length does not match error state");
    }
    ErrorState r = error;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r.x_errors[i] ^= correction.x_corrections[i];
        r.z_errors[i] ^= correction.z_corrections[i];
    }
    return r;
}

bool is_logical_failure(const ErrorState& residual_state, const SurfaceCodeLayout& layout) {
    std::uint8_t flips_z = 0;  // X residual anticommutes with logical Z
    for (auto q : layout.logical_z) flips_z ^= residual_state.x_errors[q];
    std::uint8_t flips_x = 0;
    for (auto q : layout.logical_x) flips_x ^= residual_state.z_errors[q];
    return flips_z || flips_x;
}

} // namespace qforge::qec
