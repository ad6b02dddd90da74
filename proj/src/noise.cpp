#include "qpd/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace qpd {

namespace {

// row-major vectorization superoperator of rho -> sum_k K_k rho K_k^dag
ComplexMatrix kraus_superop(const std::vector<ComplexMatrix>& kraus) {
    const Eigen::Index d = kraus.front().rows();
    ComplexMatrix t = ComplexMatrix::Zero(d * d, d * d);
    for (const auto& k : kraus) t += kron(k, k.conjugate());
    return t;
}

ComplexMatrix depolarizing_superop(const std::vector<int>& support, int n_qubits, double p) {
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    // trace-replace part written as the uniform Pauli twirl over the support
    const int arity = static_cast<int>(support.size());
    const int n_paulis = 1 << (2 * arity);
    ComplexMatrix twirl = ComplexMatrix::Zero(d * d, d * d);
    for (int code = 0; code < n_paulis; ++code) {
        ComplexMatrix op = ComplexMatrix::Identity(d, d);
        for (int b = 0; b < arity; ++b) {
            const int pauli = (code >> (2 * b)) & 3;
            if (pauli == 0) continue;
            GateKind kind = pauli == 1 ? GateKind::X : (pauli == 2 ? GateKind::Y : GateKind::Z);
            op = expanded_gate(GateSpec(kind, {support[b]}), n_qubits) * op;
        }
        twirl += kron(op, op.conjugate());
    }
    twirl /= static_cast<double>(n_paulis);
    return (1.0 - p) * ComplexMatrix::Identity(d * d, d * d) + p * twirl;
}

ComplexMatrix single_qubit_kraus_superop(const std::vector<ComplexMatrix>& local_kraus, int qubit,
                                         int n_qubits) {
    std::vector<ComplexMatrix> expanded;
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    for (const auto& k : local_kraus) {
        // embed a (possibly non-unitary) 2x2 operator at `qubit`
        ComplexMatrix full = ComplexMatrix::Zero(d, d);
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c < d; ++c) {
                if ((r & ~(Eigen::Index{1} << qubit)) != (c & ~(Eigen::Index{1} << qubit))) continue;
                full(r, c) = k((r >> qubit) & 1, (c >> qubit) & 1);
            }
        expanded.push_back(std::move(full));
    }
    return kraus_superop(expanded);
}

ComplexMatrix amplitude_damping_superop(int qubit, int n_qubits, double g) {
    ComplexMatrix k0(2, 2), k1(2, 2);
    k0 << 1, 0, 0, std::sqrt(1.0 - g);
    k1 << 0, std::sqrt(g), 0, 0;
    return single_qubit_kraus_superop({k0, k1}, qubit, n_qubits);
}

ComplexMatrix phase_damping_superop(int qubit, int n_qubits, double g) {
    ComplexMatrix k0(2, 2), k1(2, 2);
    k0 << 1, 0, 0, std::sqrt(1.0 - g);
    k1 << 0, 0, 0, std::sqrt(g);
    return single_qubit_kraus_superop({k0, k1}, qubit, n_qubits);
}

ComplexMatrix gate_superop(const GateSpec& g, int n_qubits, double meas_error) {
    if (g.kind == GateKind::P0 && meas_error > 0.0) {
        ComplexMatrix p0(2, 2), p1(2, 2);
        p0 << 1, 0, 0, 0;
        p1 << 0, 0, 0, 1;
        ComplexMatrix t0 = single_qubit_kraus_superop({p0}, g.qubits[0], n_qubits);
        ComplexMatrix t1 = single_qubit_kraus_superop({p1}, g.qubits[0], n_qubits);
        return (1.0 - meas_error) * t0 + meas_error * t1;
    }
    ComplexMatrix full = expanded_gate(g, n_qubits);
    return kron(full, full.conjugate());
}

ComplexMatrix gate_noise_superop(const std::vector<int>& support, int n_qubits,
                                 const NoiseModel& nm) {
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    ComplexMatrix t = ComplexMatrix::Identity(d * d, d * d);
    const double p = support.size() == 2 ? nm.p2 : nm.resolved_p1();
    if (p > 0.0) t = depolarizing_superop(support, n_qubits, p) * t;
    for (int q : support) {
        if (nm.gamma_ad > 0.0) t = amplitude_damping_superop(q, n_qubits, nm.gamma_ad) * t;
        if (nm.gamma_pd > 0.0) t = phase_damping_superop(q, n_qubits, nm.gamma_pd) * t;
    }
    return t;
}

// Choi matrix on the data qubits of a full-register superoperator, with
// ancilla inputs fixed to |0> and ancilla outputs traced out.
ChoiMatrix induced_data_choi(const ComplexMatrix& t, int n_qubits, int n_data) {
    const Eigen::Index d_full = Eigen::Index{1} << n_qubits;
    const Eigen::Index d_data = Eigen::Index{1} << n_data;
    const int n_anc = n_qubits - n_data;
    const Eigen::Index d_anc = Eigen::Index{1} << n_anc;

    ComplexMatrix choi = ComplexMatrix::Zero(d_data * d_data, d_data * d_data);
    Eigen::VectorXcd in_vec(d_full * d_full), out_vec(d_full * d_full);
    for (Eigen::Index i = 0; i < d_data; ++i)
        for (Eigen::Index ip = 0; ip < d_data; ++ip) {
            // input |i><ip| (x) |0><0| on the ancillas (ancillas are high bits)
            in_vec.setZero();
            in_vec(i * d_full + ip) = 1.0;
            out_vec.noalias() = t * in_vec;
            for (Eigen::Index o = 0; o < d_data; ++o)
                for (Eigen::Index op = 0; op < d_data; ++op) {
                    Complex acc = 0.0;
                    for (Eigen::Index a = 0; a < d_anc; ++a) {
                        const Eigen::Index r = a * d_data + o;
                        const Eigen::Index c = a * d_data + op;
                        acc += out_vec(r * d_full + c);
                    }
                    choi(o * d_data + i, op * d_data + ip) = acc / static_cast<double>(d_data);
                }
        }
    return ChoiMatrix(n_data, n_data, std::move(choi));
}

}  // namespace

void NoiseModel::validate() const {
    auto in_range = [](double v) { return v >= 0.0 && v < 1.0; };
    if (!in_range(p2) || !in_range(resolved_p1()) || !in_range(gamma_ad) || !in_range(gamma_pd) ||
        !in_range(meas_error))
        throw std::invalid_argument("noise rates must lie in [0, 1)");
}

ChoiMatrix simulate_noisy_circuit(const Circuit& c, const NoiseModel& nm) {
    nm.validate();
    const Eigen::Index d = Eigen::Index{1} << c.n_qubits;
    ComplexMatrix t = ComplexMatrix::Identity(d * d, d * d);
    for (const auto& g : c.gates) {
        t = gate_superop(g, c.n_qubits, nm.meas_error) * t;
        if (!nm.block_noise) t = gate_noise_superop(g.qubits, c.n_qubits, nm) * t;
    }
    if (nm.block_noise && !c.gates.empty()) {
        std::vector<int> all;
        for (int q = 0; q < c.n_qubits; ++q) all.push_back(q);
        t = gate_noise_superop(all, c.n_qubits, nm) * t;
    }
    return induced_data_choi(t, c.n_qubits, c.n_data);
}

NoiseOracle make_noise_oracle(const NoiseModel& nm) {
    nm.validate();
    return [nm](const Circuit& c) { return simulate_noisy_circuit(c, nm); };
}

NoiseOracle ideal_oracle() { return make_noise_oracle(NoiseModel::noiseless()); }

std::vector<std::pair<std::string, ChoiMatrix>> standard_basis(int n_qubits,
                                                               const NoiseOracle& oracle) {
    const auto& table = one_qubit_basis_elements();
    std::vector<std::pair<std::string, ChoiMatrix>> out;
    if (n_qubits == 1) {
        out.reserve(table.size());
        for (const auto& el : table) out.emplace_back(el.label, oracle(basis_circuit(el, 0, 1)));
        return out;
    }
    if (n_qubits == 2) {
        out.reserve(table.size() * table.size());
        for (const auto& lo : table)
            for (const auto& hi : table) {
                std::vector<GateSpec> gates;
                for (GateKind k : lo.sequence) gates.emplace_back(k, std::vector<int>{0});
                for (GateKind k : hi.sequence) gates.emplace_back(k, std::vector<int>{1});
                out.emplace_back(lo.label + "*" + hi.label, oracle(Circuit(2, std::move(gates))));
            }
        return out;
    }
    throw std::invalid_argument("standard basis supports 1 or 2 qubits");
}

}  // namespace qpd
