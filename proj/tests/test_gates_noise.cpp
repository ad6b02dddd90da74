#include "qpd/noise.hpp"

#include <Eigen/QR>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qpd/conic.hpp"

using namespace qpd;

TEST_CASE("gate unitaries") {
    CHECK((gate_unitary(GateSpec(GateKind::Ry, {0}, 0.0)) - ComplexMatrix::Identity(2, 2))
              .norm() <= 1e-15);

    ComplexMatrix s = gate_unitary(GateSpec(GateKind::S, {0}));
    CHECK((s * s * s * s - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);

    ComplexMatrix c01 = gate_unitary(GateSpec(GateKind::CNOT, {0, 1}));
    ComplexMatrix c10 = gate_unitary(GateSpec(GateKind::CNOT, {1, 0}));
    // in the shared register CNOT(1,0) is the expanded local gate with swapped roles
    ComplexMatrix c10_reg = expanded_gate(GateSpec(GateKind::CNOT, {1, 0}), 2);
    ComplexMatrix swap_product = expanded_gate(GateSpec(GateKind::CNOT, {0, 1}), 2) * c10_reg *
                                 expanded_gate(GateSpec(GateKind::CNOT, {0, 1}), 2);
    CHECK((swap_product - gate_unitary(GateSpec(GateKind::SWAP, {0, 1}))).norm() <= 1e-12);
    CHECK(is_unitary(c01));
    CHECK(is_unitary(c10));
}

TEST_CASE("gate spec validation") {
    CHECK_THROWS(GateSpec(GateKind::CNOT, {1, 1}));
    CHECK_THROWS(GateSpec(GateKind::H, {0, 1}));
    CHECK_THROWS(Circuit(2, {GateSpec(GateKind::H, {3})}));
    CHECK_THROWS(Circuit(3, {GateSpec(GateKind::CNOT, {0, 2})}));  // non-adjacent
    CHECK_THROWS(Circuit(5, {}));
}

TEST_CASE("all 16 standard-basis sequences match their closed forms") {
    const NoiseOracle ideal = ideal_oracle();
    for (const auto& el : one_qubit_basis_elements()) {
        CAPTURE(el.label);
        ChoiMatrix from_sequence = ideal(basis_circuit(el, 0, 1));
        ChoiMatrix from_op = choi_from_kraus({el.op});
        CHECK((from_sequence.matrix - from_op.matrix).norm() <= 1e-9);
    }
}

TEST_CASE("standard basis spot values") {
    auto basis = standard_basis(1, ideal_oracle());
    REQUIRE(basis.size() == 16);

    auto find = [&](const std::string& label) -> const ChoiMatrix& {
        for (const auto& [l, c] : basis)
            if (l == label) return c;
        FAIL("missing label");
        return basis.front().second;
    };
    CHECK((find("X").matrix - choi_from_unitary(oracles::pauli(1)).matrix).norm() <= 1e-12);
    CHECK(find("piZ").matrix.trace().real() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("the 16 noiseless basis channels are linearly independent") {
    auto basis = standard_basis(1, ideal_oracle());
    HermitianIndexer hi(4);
    RealMatrix stacked(16, hi.size());
    for (int i = 0; i < 16; ++i) stacked.row(i) = hi.components(basis[i].second.matrix);
    Eigen::ColPivHouseholderQR<RealMatrix> qr(stacked);
    qr.setThreshold(1e-9);
    CHECK(qr.rank() == 16);
}

TEST_CASE("two-qubit standard basis tensors the one-qubit channels") {
    auto basis1 = standard_basis(1, ideal_oracle());
    auto basis2 = standard_basis(2, ideal_oracle());
    REQUIRE(basis2.size() == 256);
    // element (i, j) has channel i on qubit 0 and j on qubit 1
    const int i = 5, j = 11;
    const auto& [label, choi] = basis2[i * 16 + j];
    CHECK(label == basis1[i].first + "*" + basis1[j].first);
    ChoiMatrix expected = tensor(basis1[i].second, basis1[j].second);
    CHECK((choi.matrix - expected.matrix).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("noiseless simulation equals the ideal circuit channel") {
    Circuit c(2, {GateSpec(GateKind::H, {0}), GateSpec(GateKind::CNOT, {0, 1}),
                  GateSpec(GateKind::Rz, {1}, 0.7)});
    ChoiMatrix sim = simulate_noisy_circuit(c, NoiseModel::noiseless());
    ComplexMatrix u = expanded_gate(c.gates[2], 2) * expanded_gate(c.gates[1], 2) *
                      expanded_gate(c.gates[0], 2);
    CHECK((sim.matrix - choi_from_unitary(u).matrix).norm() <= 1e-12);
}

TEST_CASE("single-gate noise composes as depolarizing after the ideal gate") {
    NoiseModel nm;
    nm.p2 = 0.1;  // p1 resolves to 0.01
    CHECK(nm.resolved_p1() == doctest::Approx(0.01));
    Circuit c(1, {GateSpec(GateKind::Ry, {0}, 1.23)});
    ChoiMatrix sim = simulate_noisy_circuit(c, nm);

    const double p = 0.01;
    ChoiMatrix dep = choi_from_kraus(
        {std::sqrt(1 - 3 * p / 4) * oracles::pauli(0), std::sqrt(p / 4) * oracles::pauli(1),
         std::sqrt(p / 4) * oracles::pauli(2), std::sqrt(p / 4) * oracles::pauli(3)});
    ChoiMatrix ideal = choi_from_unitary(gate_unitary(c.gates[0]));
    CHECK((sim.matrix - compose(dep, ideal).matrix).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("noisy CNOT diamond distance matches the Pauli-channel closed form") {
    NoiseModel nm = NoiseModel::depolarizing(0.02);
    Circuit c(2, {GateSpec(GateKind::CNOT, {0, 1})});
    ChoiMatrix noisy = simulate_noisy_circuit(c, nm);
    ChoiMatrix ideal = choi_from_unitary(gate_unitary(c.gates[0]));

    // (D_p - id) conjugated by the unitary: coefficients 15p/16 on identity
    // deficit and p/16 on the 15 non-identity Pauli words
    std::vector<double> coeffs{15.0 * 0.02 / 16.0};
    for (int k = 1; k < 16; ++k) coeffs.push_back(0.02 / 16.0);
    const double expected = oracles::pauli_map_diamond(coeffs);
    CHECK(expected == doctest::Approx(2.0 * (15.0 / 16.0) * 0.02).epsilon(1e-12));

    ChoiMatrix diff = noisy;
    diff.matrix -= ideal.matrix;
    // the normalized Choi of a Pauli-diagonal map is diagonal in the
    // orthonormal Bell-type basis, so its trace norm is the diamond norm
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(diff.matrix, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().cwiseAbs().sum() == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("noise monotonicity for Ry, CNOT, SWAP") {
    auto noisy_error = [](GateKind kind, double p2) {
        NoiseModel nm = NoiseModel::depolarizing(p2);
        const int n = gate_arity(kind) == 2 ? 2 : 1;
        std::vector<int> qubits(gate_arity(kind));
        for (int q = 0; q < gate_arity(kind); ++q) qubits[q] = q;
        GateSpec g(kind, qubits, 0.9);
        Circuit c(n, {g});
        ChoiMatrix noisy = simulate_noisy_circuit(c, nm);
        ChoiMatrix diff = choi_from_unitary(gate_unitary(g));
        diff.matrix = noisy.matrix - diff.matrix;
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(diff.matrix, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().sum();  // tight for Pauli-diagonal noise
    };
    for (GateKind kind : {GateKind::Ry, GateKind::CNOT, GateKind::SWAP}) {
        double prev = -1.0;
        for (double p = 0.0; p <= 0.0401; p += 0.005) {
            const double err = noisy_error(kind, p);
            CHECK(err >= prev - 1e-12);
            prev = err;
        }
        CHECK(noisy_error(kind, 0.0) <= 1e-12);
    }
}

TEST_CASE("oracle outputs are CP, and TP without postselection") {
    std::mt19937_64 rng(37);
    NoiseModel nm = NoiseModel::depolarizing(0.03);
    nm.gamma_ad = 0.02;
    nm.gamma_pd = 0.01;
    auto oracle = make_noise_oracle(nm);

    Circuit plain(2, {GateSpec(GateKind::H, {0}), GateSpec(GateKind::CNOT, {0, 1}),
                      GateSpec(GateKind::Ry, {1}, 0.4)});
    TpcpVerdict v1 = is_tpcp(oracle(plain));
    CHECK(v1.tpcp());

    Circuit post(1, {GateSpec(GateKind::H, {0}), GateSpec(GateKind::P0, {0})});
    TpcpVerdict v2 = is_tpcp(oracle(post));
    CHECK(v2.cp);
    CHECK(!v2.tp);
}

TEST_CASE("ancilla qubits are traced out with |0> inputs") {
    // CNOT(data -> ancilla) followed by tracing the ancilla dephases the data
    Circuit c(2, {GateSpec(GateKind::CNOT, {0, 1})}, 1);
    ChoiMatrix sim = simulate_noisy_circuit(c, NoiseModel::noiseless());
    CHECK(sim.n_in == 1);
    ComplexMatrix k0(2, 2), k1(2, 2);
    k0 << 1, 0, 0, 0;
    k1 << 0, 0, 0, 1;
    ChoiMatrix dephase = choi_from_kraus({k0, k1});
    CHECK((sim.matrix - dephase.matrix).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("block-noise mode applies a single terminal noise channel") {
    NoiseModel per_gate = NoiseModel::depolarizing(0.0);
    per_gate.p1 = 0.02;
    NoiseModel block = per_gate;
    block.block_noise = true;

    const auto& el = one_qubit_basis_elements()[1];  // X, four gates
    Circuit c = basis_circuit(el, 0, 1);
    ChoiMatrix sim_block = simulate_noisy_circuit(c, block);

    const double p = 0.02;
    ChoiMatrix dep = choi_from_kraus(
        {std::sqrt(1 - 3 * p / 4) * oracles::pauli(0), std::sqrt(p / 4) * oracles::pauli(1),
         std::sqrt(p / 4) * oracles::pauli(2), std::sqrt(p / 4) * oracles::pauli(3)});
    ChoiMatrix expected = compose(dep, choi_from_kraus({el.op}));
    CHECK((sim_block.matrix - expected.matrix).cwiseAbs().maxCoeff() <= 1e-10);

    ChoiMatrix sim_per_gate = simulate_noisy_circuit(c, per_gate);
    CHECK((sim_per_gate.matrix - expected.matrix).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("noise model validation") {
    NoiseModel nm;
    nm.p2 = 1.0;
    CHECK_THROWS(nm.validate());
    nm.p2 = 0.5;
    nm.gamma_ad = -0.1;
    CHECK_THROWS(nm.validate());
}
