#include "qpd/gates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qpd {

namespace {

const Complex kI(0.0, 1.0);

ComplexMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
    ComplexMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

ComplexMatrix pauli_x() { return mat2(0, 1, 1, 0); }
ComplexMatrix pauli_y() { return mat2(0, -kI, kI, 0); }
ComplexMatrix pauli_z() { return mat2(1, 0, 0, -1); }
ComplexMatrix hadamard() { return mat2(1, 1, 1, -1) / std::sqrt(2.0); }
ComplexMatrix phase_s() { return mat2(1, 0, 0, kI); }
ComplexMatrix proj0() { return mat2(1, 0, 0, 0); }

std::vector<GateKind> parse_sequence(const std::string& symbols) {
    // symbols are in the paper's reading order (leftmost acts last); the
    // returned list is in circuit execution order.
    std::vector<GateKind> seq;
    for (char c : symbols) {
        switch (c) {
            case 'H': seq.push_back(GateKind::H); break;
            case 'S': seq.push_back(GateKind::S); break;
            case 'P': seq.push_back(GateKind::P0); break;
            default: throw std::logic_error("bad basis sequence symbol");
        }
    }
    std::reverse(seq.begin(), seq.end());
    return seq;
}

}  // namespace

int gate_arity(GateKind kind) {
    switch (kind) {
        case GateKind::CNOT:
        case GateKind::SWAP: return 2;
        default: return 1;
    }
}

std::string gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::H: return "H";
        case GateKind::S: return "S";
        case GateKind::P0: return "P0";
        case GateKind::X: return "X";
        case GateKind::Y: return "Y";
        case GateKind::Z: return "Z";
        case GateKind::Ry: return "Ry";
        case GateKind::Rz: return "Rz";
        case GateKind::CNOT: return "CNOT";
        case GateKind::SWAP: return "SWAP";
    }
    return "?";
}

bool gate_has_angle(GateKind kind) { return kind == GateKind::Ry || kind == GateKind::Rz; }

GateSpec::GateSpec(GateKind k, std::vector<int> q, double a) : kind(k), qubits(std::move(q)), angle(a) {
    if (static_cast<int>(qubits.size()) != gate_arity(kind))
        throw std::invalid_argument("gate arity mismatch for " + gate_name(kind));
    if (qubits.size() == 2 && qubits[0] == qubits[1])
        throw std::invalid_argument("two-qubit gate needs distinct qubits");
}

Circuit::Circuit(int n_qubits_, std::vector<GateSpec> gates_, int n_data_)
    : n_qubits(n_qubits_), n_data(n_data_ < 0 ? n_qubits_ : n_data_), gates(std::move(gates_)) {
    if (n_qubits < 1 || n_qubits > 4) throw std::invalid_argument("circuits support 1..4 qubits");
    if (n_data < 1 || n_data > n_qubits) throw std::invalid_argument("invalid data qubit count");
    for (const auto& g : gates) {
        for (int q : g.qubits)
            if (q < 0 || q >= n_qubits) throw std::invalid_argument("gate qubit out of range");
        if (g.qubits.size() == 2 && std::abs(g.qubits[0] - g.qubits[1]) != 1)
            throw std::invalid_argument("two-qubit gate violates linear connectivity");
    }
}

bool Circuit::has_postselection() const {
    for (const auto& g : gates)
        if (g.kind == GateKind::P0) return true;
    return false;
}

ComplexMatrix gate_unitary(const GateSpec& g) {
    switch (g.kind) {
        case GateKind::H: return hadamard();
        case GateKind::S: return phase_s();
        case GateKind::P0: return proj0();
        case GateKind::X: return pauli_x();
        case GateKind::Y: return pauli_y();
        case GateKind::Z: return pauli_z();
        case GateKind::Ry: {
            const double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
            return mat2(c, -s, s, c);
        }
        case GateKind::Rz: {
            return mat2(std::exp(-kI * (g.angle / 2.0)), 0, 0, std::exp(kI * (g.angle / 2.0)));
        }
        case GateKind::CNOT: {
            // local ordering: first listed qubit (control) is bit 0
            ComplexMatrix m = ComplexMatrix::Zero(4, 4);
            m(0, 0) = 1;  // |c=0,t=0>
            m(2, 2) = 1;  // |c=0,t=1>
            m(3, 1) = 1;  // |c=1,t=0> -> |c=1,t=1>
            m(1, 3) = 1;
            return m;
        }
        case GateKind::SWAP: {
            ComplexMatrix m = ComplexMatrix::Zero(4, 4);
            m(0, 0) = 1;
            m(2, 1) = 1;
            m(1, 2) = 1;
            m(3, 3) = 1;
            return m;
        }
    }
    throw std::invalid_argument("unknown gate");
}

ComplexMatrix expanded_gate(const GateSpec& g, int n_qubits) {
    const ComplexMatrix local = gate_unitary(g);
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    const int arity = gate_arity(g.kind);
    const Eigen::Index d_loc = Eigen::Index{1} << arity;

    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    Eigen::Index rest_mask = d - 1;
    for (int q : g.qubits) rest_mask &= ~(Eigen::Index{1} << q);

    auto compose_index = [&](Eigen::Index rest, Eigen::Index loc) {
        Eigen::Index idx = rest;
        for (int b = 0; b < arity; ++b)
            if (loc & (Eigen::Index{1} << b)) idx |= Eigen::Index{1} << g.qubits[b];
        return idx;
    };

    // enumerate bit patterns of the untouched qubits
    for (Eigen::Index rest = 0; rest < d; ++rest) {
        if ((rest & rest_mask) != rest) continue;
        for (Eigen::Index lr = 0; lr < d_loc; ++lr)
            for (Eigen::Index lc = 0; lc < d_loc; ++lc)
                out(compose_index(rest, lr), compose_index(rest, lc)) = local(lr, lc);
    }
    return out;
}

const std::vector<BasisElement>& one_qubit_basis_elements() {
    static const std::vector<BasisElement> table = [] {
        const double rt2 = std::sqrt(2.0);
        const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
        const ComplexMatrix x = pauli_x(), y = pauli_y(), z = pauli_z();
        std::vector<BasisElement> t;
        t.push_back({"id", id, parse_sequence("")});
        t.push_back({"X", x, parse_sequence("HSSH")});
        t.push_back({"Y", y, parse_sequence("HSSHSS")});
        t.push_back({"Z", z, parse_sequence("SS")});
        t.push_back({"Rx", (id + kI * x) / rt2, parse_sequence("HSSSH")});
        t.push_back({"Ry", (id + kI * y) / rt2, parse_sequence("SHSSSHSSS")});
        t.push_back({"Rz", (id + kI * z) / rt2, parse_sequence("SSS")});
        t.push_back({"Ryz", (y + z) / rt2, parse_sequence("HSSSHSS")});
        t.push_back({"Rzx", (z + x) / rt2, parse_sequence("SSSHSSSHSSS")});
        t.push_back({"Rxy", (x + y) / rt2, parse_sequence("HSSHSSS")});
        t.push_back({"piX", (id + x) / 2.0, parse_sequence("SHSHPHSSSHSSS")});
        t.push_back({"piY", (id + y) / 2.0, parse_sequence("HSSSHPHSH")});
        t.push_back({"piZ", (id + z) / 2.0, parse_sequence("P")});
        t.push_back({"piYZ", (y + kI * z) / 2.0, parse_sequence("SHSHPHSHSSS")});
        t.push_back({"piZX", (z + kI * x) / 2.0, parse_sequence("HSSSHPHSHSS")});
        t.push_back({"piXY", (x + kI * y) / 2.0, parse_sequence("PHSSH")});
        return t;
    }();
    return table;
}

Circuit basis_circuit(const BasisElement& element, int qubit, int n_qubits) {
    std::vector<GateSpec> gates;
    gates.reserve(element.sequence.size());
    for (GateKind k : element.sequence) gates.emplace_back(k, std::vector<int>{qubit});
    return Circuit(n_qubits, std::move(gates));
}

}  // namespace qpd
