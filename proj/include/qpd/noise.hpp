#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qpd/gates.hpp"

namespace qpd {

// Parameterized per-gate noise. The depolarizing convention on an n-qubit
// support is D_p(rho) = (1-p) rho + p tr(rho) I / 2^n, applied after each
// gate on the gate's own qubits, followed by optional amplitude / phase
// damping on each support qubit. P0 is modeled as the ideal projector
// (mixed with P1 at rate `meas_error`) followed by single-qubit noise at p1.
struct NoiseModel {
    double p2 = 0.0;          // two-qubit depolarizing rate
    double p1 = -1.0;         // single-qubit rate; negative means 0.1 * p2
    double gamma_ad = 0.0;    // amplitude damping per gate qubit
    double gamma_pd = 0.0;    // phase damping per gate qubit
    double meas_error = 0.0;  // postselection measurement error rate
    bool block_noise = false; // apply noise once per circuit instead of per gate

    double resolved_p1() const { return p1 < 0.0 ? 0.1 * p2 : p1; }
    void validate() const;

    static NoiseModel noiseless() { return NoiseModel{}; }
    static NoiseModel depolarizing(double p2_) {
        NoiseModel nm;
        nm.p2 = p2_;
        return nm;
    }
};

// Maps an intended circuit to the channel the hardware realizes on the data
// qubits (ancillas start in |0> and are traced out).
using NoiseOracle = std::function<ChoiMatrix(const Circuit&)>;

// Exact density-matrix simulation of the circuit under the noise model; this
// is the built-in NoiseOracle implementation.
ChoiMatrix simulate_noisy_circuit(const Circuit& c, const NoiseModel& nm);

NoiseOracle make_noise_oracle(const NoiseModel& nm);
NoiseOracle ideal_oracle();

// The 16 standard-basis channels (n = 1) or their 256 pairwise tensor-product
// circuits (n = 2), realized through the oracle.
std::vector<std::pair<std::string, ChoiMatrix>> standard_basis(int n_qubits,
                                                               const NoiseOracle& oracle);

}  // namespace qpd
