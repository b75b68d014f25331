#include "qforge/qec/pauli_frame.hpp"

#include "qforge/error.hpp"
#include "qforge/text.hpp"

#include <sstream>

namespace qforge::qec {

Circuit Circuit::parse(std::string_view source) {
    Circuit c;
    int line_no = 0;
    for (auto raw : text::split_lines(source)) {
        ++line_no;
        auto line = raw.substr(0, raw.find('#'));
        std::istringstream in{std::string(line)};
        std::string name;
        if (!(in >> name)) continue;
        for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));

        Gate g{};
        if (name == "H") g.kind = GateKind::H;
        else if (name == "X") g.kind = GateKind::X;
        else if (name == "Z") g.kind = GateKind::Z;
        else if (name == "CX" || name == "CNOT") g.kind = GateKind::CX;
        else if (name == "M" || name == "MEASURE") g.kind = GateKind::Measure;
        else if (name == "INJECT_X") g.kind = GateKind::InjectX;
        else if (name == "INJECT_Y") g.kind = GateKind::InjectY;
        else if (name == "INJECT_Z") g.kind = GateKind::InjectZ;
        else throw Error(ErrorCode::unsupported_gate, "line " + std::to_string(line_no) + ": " + name);

        int q;
        while (in >> q) {
            if (q < 0) throw Error(ErrorCode::invalid_params, "negative qubit index on line " + std::to_string(line_no));
            g.qubits.push_back(q);
            c.num_qubits = std::max(c.num_qubits, q + 1);
        }
        if (!in.eof()) throw Error(ErrorCode::invalid_params, "bad qubit index on line " + std::to_string(line_no));
        if (g.qubits.empty() || (g.kind == GateKind::CX && g.qubits.size() % 2 != 0)) {
            throw Error(ErrorCode::invalid_params, "wrong operand count on line " + std::to_string(line_no));
        }
        c.gates.push_back(std::move(g));
    }
    return c;
}

std::size_t Circuit::num_measurements() const {
    std::size_t n = 0;
    for (const auto& g : gates) {
        if (g.kind == GateKind::Measure) n += g.qubits.size();
    }
    return n;
}

Circuit deutsch_jozsa_constant(int n) {
    Circuit c;
    c.num_qubits = n;
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    c.gates.push_back({GateKind::H, all});
    // The constant-zero oracle is the identity.
    c.gates.push_back({GateKind::H, all});
    c.gates.push_back({GateKind::Measure, all});
    return c;
}

namespace {

/// Aaronson-Gottesman stabilizer tableau, used for the noiseless reference.
class Tableau {
public:
    explicit Tableau(int n) : n_(n), x_(2 * n + 1, BitVector(n, 0)), z_(2 * n + 1, BitVector(n, 0)), r_(2 * n + 1, 0) {
        for (int i = 0; i < n; ++i) {
            x_[i][i] = 1;      // destabilizers X_i
            z_[n + i][i] = 1;  // stabilizers Z_i
        }
    }

    void h(int q) {
        for (int i = 0; i < 2 * n_; ++i) {
            r_[i] ^= x_[i][q] & z_[i][q];
            std::swap(x_[i][q], z_[i][q]);
        }
    }
    void x(int q) {
        for (int i = 0; i < 2 * n_; ++i) r_[i] ^= z_[i][q];
    }
    void z(int q) {
        for (int i = 0; i < 2 * n_; ++i) r_[i] ^= x_[i][q];
    }
    void cx(int a, int b) {
        for (int i = 0; i < 2 * n_; ++i) {
            r_[i] ^= x_[i][a] & z_[i][b] & (x_[i][b] ^ z_[i][a] ^ 1);
            x_[i][b] ^= x_[i][a];
            z_[i][a] ^= z_[i][b];
        }
    }

    std::uint8_t measure(int q, Rng& rng) {
        int p = -1;
        for (int i = n_; i < 2 * n_; ++i) {
            if (x_[i][q]) {
                p = i;
                break;
            }
        }
        if (p >= 0) {
            for (int i = 0; i < 2 * n_; ++i) {
                if (i != p && x_[i][q]) rowsum(i, p);
            }
            x_[p - n_] = x_[p];
            z_[p - n_] = z_[p];
            r_[p - n_] = r_[p];
            std::fill(x_[p].begin(), x_[p].end(), 0);
            std::fill(z_[p].begin(), z_[p].end(), 0);
            z_[p][q] = 1;
            r_[p] = static_cast<std::uint8_t>(rng.below(2));
            return r_[p];
        }
        const int scratch = 2 * n_;
        std::fill(x_[scratch].begin(), x_[scratch].end(), 0);
        std::fill(z_[scratch].begin(), z_[scratch].end(), 0);
        r_[scratch] = 0;
        for (int i = 0; i < n_; ++i) {
            if (x_[i][q]) rowsum(scratch, i + n_);
        }
        return r_[scratch];
    }

private:
    static int g(int x1, int z1, int x2, int z2) {
        if (!x1 && !z1) return 0;
        if (x1 && z1) return z2 - x2;
        if (x1) return z2 * (2 * x2 - 1);
        return x2 * (1 - 2 * z2);
    }

    void rowsum(int h, int i) {
        int sum = 2 * r_[h] + 2 * r_[i];
        for (int j = 0; j < n_; ++j) sum += g(x_[i][j], z_[i][j], x_[h][j], z_[h][j]);
        r_[h] = static_cast<std::uint8_t>(((sum % 4) + 4) % 4 == 2 ? 1 : 0);
        for (int j = 0; j < n_; ++j) {
            x_[h][j] ^= x_[i][j];
            z_[h][j] ^= z_[i][j];
        }
    }

    int n_;
    std::vector<BitVector> x_;
    std::vector<BitVector> z_;
    BitVector r_;
};

void check_qubits(const Circuit& c) {
    for (const auto& g : c.gates) {
        for (int q : g.qubits) {
            if (q < 0 || q >= c.num_qubits) throw Error(ErrorCode::invalid_params, "qubit index out of range");
        }
    }
}

std::string reference_outcome(const Circuit& c, std::uint64_t seed) {
    Tableau t(c.num_qubits);
    auto rng = Rng::substream(seed, "qec.pauli_frame.reference");
    std::string bits;
    for (const auto& g : c.gates) {
        switch (g.kind) {
            case GateKind::H: for (int q : g.qubits) t.h(q); break;
            case GateKind::X: for (int q : g.qubits) t.x(q); break;
            case GateKind::Z: for (int q : g.qubits) t.z(q); break;
            case GateKind::CX:
                for (std::size_t i = 0; i + 1 < g.qubits.size(); i += 2) t.cx(g.qubits[i], g.qubits[i + 1]);
                break;
            case GateKind::Measure:
                for (int q : g.qubits) bits.push_back(t.measure(q, rng) ? '1' : '0');
                break;
            default: break;
        }
    }
    return bits;
}

struct Frame {
    BitVector x;
    BitVector z;

    void depolarize(int q, double p, Rng& rng) {
        if (!rng.bernoulli(p)) return;
        switch (rng.below(3)) {
            case 0: x[q] ^= 1; break;
            case 1: x[q] ^= 1; z[q] ^= 1; break;
            default: z[q] ^= 1; break;
        }
    }
};

} // namespace

Histogram pauli_frame_simulate(const Circuit& circuit, const NoiseModel& model, std::size_t shots, std::uint64_t seed) {
    model.validate();
    check_qubits(circuit);
    const auto reference = reference_outcome(circuit, seed);
    const auto n = static_cast<std::size_t>(circuit.num_qubits);
    const double p = model.p;

    Histogram counts;
    std::string bits(reference.size(), '0');
    for (std::size_t shot = 0; shot < shots; ++shot) {
        auto rng = Rng::substream(seed, "qec.pauli_frame.shot", shot);
        Frame f{BitVector(n, 0), BitVector(n, 0)};
        // A random Z frame on |0> (or after a measurement) is a no-op that
        // randomises later non-deterministic outcomes.
        for (auto& b : f.z) b = static_cast<std::uint8_t>(rng.below(2));
        std::size_t m = 0;
        for (const auto& g : circuit.gates) {
            switch (g.kind) {
                case GateKind::H:
                    for (int q : g.qubits) {
                        std::swap(f.x[q], f.z[q]);
                        f.depolarize(q, p, rng);
                    }
                    break;
                case GateKind::X:
                case GateKind::Z:
                    for (int q : g.qubits) f.depolarize(q, p, rng);
                    break;
                case GateKind::CX:
                    for (std::size_t i = 0; i + 1 < g.qubits.size(); i += 2) {
                        const int c = g.qubits[i];
                        const int t = g.qubits[i + 1];
                        f.x[t] ^= f.x[c];
                        f.z[c] ^= f.z[t];
                        f.depolarize(c, p, rng);
                        f.depolarize(t, p, rng);
                    }
                    break;
                case GateKind::Measure:
                    for (int q : g.qubits) {
                        f.depolarize(q, p, rng);
                        bits[m] = static_cast<char>('0' + ((reference[m] - '0') ^ f.x[q]));
                        ++m;
                        f.z[q] = static_cast<std::uint8_t>(rng.below(2));
                    }
                    break;
                case GateKind::InjectX: for (int q : g.qubits) f.x[q] ^= 1; break;
                case GateKind::InjectY:
                    for (int q : g.qubits) {
                        f.x[q] ^= 1;
                        f.z[q] ^= 1;
                    }
                    break;
                case GateKind::InjectZ: for (int q : g.qubits) f.z[q] ^= 1; break;
            }
        }
        ++counts[bits];
    }
    return counts;
}

Histogram apply_corrections(const Histogram& counts, const CorrectionSet& corrections) {
    const auto& flips = corrections.x_corrections;
    Histogram out;
    for (const auto& [bits, n] : counts) {
        if (bits.size() != flips.size()) {
            throw Error(ErrorCode::length_mismatch, "bitstring of length " + std::to_string(bits.size()) +
                                                        " vs correction of length " + std::to_string(flips.size()));
        }
        std::string corrected = bits;
        for (std::size_t i = 0; i < corrected.size(); ++i) {
            if (flips[i]) corrected[i] = corrected[i] == '0' ? '1' : '0';
        }
        out[corrected] += n;
    }
    return out;
}

std::uint64_t total_shots(const Histogram& counts) {
    std::uint64_t total = 0;
    for (const auto& [bits, n] : counts) total += n;
    return total;
}

} // namespace qforge::qec
