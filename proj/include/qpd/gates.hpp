#pragma once

#include <string>
#include <vector>

#include "qpd/channel_algebra.hpp"

namespace qpd {

enum class GateKind { H, S, P0, X, Y, Z, Ry, Rz, CNOT, SWAP };

int gate_arity(GateKind kind);
std::string gate_name(GateKind kind);
bool gate_has_angle(GateKind kind);

struct GateSpec {
    GateKind kind;
    std::vector<int> qubits;  // [target] or [control, target] / [a, b]
    double angle = 0.0;       // radians; only for Ry / Rz

    GateSpec(GateKind k, std::vector<int> q, double a = 0.0);

    bool trace_preserving() const { return kind != GateKind::P0; }
};

// A circuit on at most 4 qubits with linear connectivity (two-qubit gates act
// on adjacent indices only). Qubits >= n_data are ancillas: the noise oracle
// fixes them to |0> on input and traces them out of the result.
struct Circuit {
    int n_qubits = 1;
    int n_data = 1;
    std::vector<GateSpec> gates;

    Circuit() = default;  // empty single-qubit circuit
    Circuit(int n_qubits_, std::vector<GateSpec> gates_, int n_data_ = -1);

    bool has_postselection() const;
};

// Exact unitary (or projector, for P0) of a gate on its own qubits, first
// listed qubit least significant.
ComplexMatrix gate_unitary(const GateSpec& g);

// The gate's operator embedded into an n_qubits register.
ComplexMatrix expanded_gate(const GateSpec& g, int n_qubits);

// One row of the 16-element single-qubit standard basis: a closed-form
// operator M with channel rho -> M rho M^dag, and the equivalent H/S/P0 gate
// sequence (in circuit execution order).
struct BasisElement {
    std::string label;
    ComplexMatrix op;
    std::vector<GateKind> sequence;
};

const std::vector<BasisElement>& one_qubit_basis_elements();

// The basis element's gate sequence as a circuit acting on `qubit` of an
// n_qubits register.
Circuit basis_circuit(const BasisElement& element, int qubit, int n_qubits);

}  // namespace qpd
