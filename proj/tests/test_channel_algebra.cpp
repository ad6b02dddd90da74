#include "qpd/channel_algebra.hpp"

#include <random>

#include "doctest.h"
#include "oracles.hpp"

using namespace qpd;

namespace {

ChoiMatrix depolarizing_choi(double p) {
    const double keep = std::sqrt(1.0 - 3.0 * p / 4.0);
    const double flip = std::sqrt(p / 4.0);
    return choi_from_kraus({keep * oracles::pauli(0), flip * oracles::pauli(1),
                            flip * oracles::pauli(2), flip * oracles::pauli(3)});
}

}  // namespace

TEST_CASE("choi_from_kraus identity gives the maximally entangled state") {
    ChoiMatrix c = choi_from_kraus({ComplexMatrix::Identity(2, 2)});
    CHECK(c.matrix.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(channel_rank(c).value == 1);
    ComplexMatrix omega = ComplexMatrix::Zero(4, 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) omega(i * 2 + i, j * 2 + j) = 0.5;
    CHECK((c.matrix - omega).norm() <= 1e-12);
}

TEST_CASE("depolarizing Choi eigenvalues match the Bell-basis diagonalization") {
    ChoiMatrix c = depolarizing_choi(0.1);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(c.matrix, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(3) == doctest::Approx(0.925).epsilon(1e-12));
    for (int k = 0; k < 3; ++k) CHECK(es.eigenvalues()(k) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(channel_rank(c).value == 4);
    CHECK(is_tpcp(c).tpcp());
}

TEST_CASE("postselection projector has Choi trace 1/2") {
    ComplexMatrix p0(2, 2);
    p0 << 1, 0, 0, 0;
    ChoiMatrix c = choi_from_kraus({p0});
    CHECK(c.matrix.trace().real() == doctest::Approx(0.5).epsilon(1e-12));
    TpcpVerdict v = is_tpcp(c);
    CHECK(v.cp);
    CHECK(!v.tp);
    // marginal is diag(1/2, 0): deficit 1/2 on the |1> column
    CHECK(tp_marginal(c)(1, 1).real() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("choi_from_kraus rejects trace-increasing maps") {
    CHECK_THROWS(choi_from_kraus({1.1 * ComplexMatrix::Identity(2, 2)}));
    ComplexMatrix wrong(2, 1);
    wrong << 1, 0;
    CHECK_THROWS(choi_from_kraus({ComplexMatrix::Identity(2, 2), wrong}));
}

TEST_CASE("choi_from_unitary basics") {
    CHECK_THROWS(choi_from_unitary(2.0 * ComplexMatrix::Identity(2, 2)));
    ChoiMatrix cx = choi_from_unitary(oracles::pauli(1));
    CHECK(channel_rank(cx).value == 1);

    std::mt19937_64 rng(7);
    ComplexMatrix cnot = ComplexMatrix::Zero(4, 4);
    cnot(0, 0) = cnot(2, 2) = cnot(3, 1) = cnot(1, 3) = 1.0;
    ChoiMatrix cc = choi_from_unitary(cnot);
    CHECK(cc.side() == 16);
    CHECK(cc.matrix.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    // purity of a rank-1 trace-1 state
    CHECK((cc.matrix * cc.matrix).trace().real() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("apply_channel on reference cases") {
    std::mt19937_64 rng(11);
    ComplexMatrix rho = oracles::random_density(2, rng);

    ChoiMatrix id = ChoiMatrix::identity(1);
    CHECK((apply_channel(id, rho) - rho).norm() <= 1e-12);

    ChoiMatrix full = depolarizing_choi(1.0);
    ComplexMatrix out = apply_channel(full, rho);
    CHECK((out - 0.5 * ComplexMatrix::Identity(2, 2)).norm() <= 1e-12);

    ComplexMatrix p0(2, 2);
    p0 << 1, 0, 0, 0;
    ChoiMatrix post = choi_from_kraus({p0});
    ComplexMatrix mixed = 0.5 * ComplexMatrix::Identity(2, 2);
    ComplexMatrix direct = p0 * mixed * p0.adjoint();  // Kraus evaluation oracle
    CHECK((apply_channel(post, mixed) - direct).norm() <= 1e-12);
    CHECK(apply_channel(post, mixed).trace().real() == doctest::Approx(0.5));
}

TEST_CASE("compose and tensor reference cases") {
    ChoiMatrix cx = choi_from_unitary(oracles::pauli(1));
    ChoiMatrix id1 = ChoiMatrix::identity(1);
    CHECK((compose(cx, cx).matrix - id1.matrix).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((tensor(id1, id1).matrix - ChoiMatrix::identity(2).matrix).cwiseAbs().maxCoeff() <=
          1e-12);
}

TEST_CASE("partial trace of a dilated unitary reproduces the Kraus channel") {
    std::mt19937_64 rng(13);
    ComplexMatrix u = oracles::random_unitary(8, rng);
    // isometry V = U restricted to ancilla |0> on the high qubit, and its
    // Kraus blocks K_k = <k|_R V
    ComplexMatrix v = u.leftCols(4);
    ComplexMatrix k0 = v.topRows(4), k1 = v.bottomRows(4);
    ComplexMatrix p0_anc = ComplexMatrix::Zero(2, 2);
    p0_anc(0, 0) = 1.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            ComplexMatrix probe = ComplexMatrix::Zero(4, 4);
            probe(i, j) = 1.0;
            ComplexMatrix lhs = partial_trace(
                u * kron(p0_anc, probe) * u.adjoint(), 3, {2});
            // direct Kraus-sum evaluation of tr_R[V probe V^dag]
            ComplexMatrix rhs = k0 * probe * k0.adjoint() + k1 * probe * k1.adjoint();
            CHECK((lhs - rhs).norm() <= 1e-10);
        }
}

TEST_CASE("kraus round trip over random CP maps") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + (trial % 2);
        ChoiMatrix c = oracles::random_tpcp_choi(n, 1, rng);
        ChoiMatrix back = choi_from_kraus(kraus_from_choi(c), Tolerances::defaults());
        CHECK((back.matrix - c.matrix).norm() <= 1e-9);
    }
}

TEST_CASE("apply_channel is linear") {
    std::mt19937_64 rng(19);
    ChoiMatrix a = oracles::random_tpcp_choi(1, 1, rng);
    ChoiMatrix b = oracles::random_tpcp_choi(1, 1, rng);
    ComplexMatrix rho = oracles::random_density(2, rng);
    const double alpha = 0.7, beta = -1.3;
    ChoiMatrix mix = a;
    mix.matrix = alpha * a.matrix + beta * b.matrix;
    ComplexMatrix lhs = apply_channel(mix, rho);
    ComplexMatrix rhs = alpha * apply_channel(a, rho) + beta * apply_channel(b, rho);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("compose is associative") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        ChoiMatrix a = oracles::random_tpcp_choi(1, 1, rng);
        ChoiMatrix b = oracles::random_tpcp_choi(1, 1, rng);
        ChoiMatrix c = oracles::random_tpcp_choi(1, 1, rng);
        ChoiMatrix lhs = compose(compose(a, b), c);
        ChoiMatrix rhs = compose(a, compose(b, c));
        CHECK((lhs.matrix - rhs.matrix).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("tensor then partial trace recovers the first factor") {
    std::mt19937_64 rng(29);
    ChoiMatrix a = oracles::random_hp_choi(1, rng);
    ChoiMatrix b = oracles::random_tpcp_choi(1, 1, rng);  // TP second factor
    ChoiMatrix ab = tensor(a, b);
    // Choi qubit layout: bits 0,1 = (in_a, in_b), bits 2,3 = (out_a, out_b)
    ComplexMatrix reduced = partial_trace(ab.matrix, 4, {1, 3});
    CHECK((reduced - a.matrix).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("transfer matrix round trip") {
    std::mt19937_64 rng(31);
    ChoiMatrix c = oracles::random_tpcp_choi(2, 1, rng);
    ChoiMatrix back = choi_from_transfer(transfer_from_choi(c), 2, 2);
    CHECK((back.matrix - c.matrix).norm() <= 1e-12);
}

TEST_CASE("density matrix validation") {
    CHECK_THROWS(DensityMatrix(ComplexMatrix::Identity(2, 2)));  // trace 2
    ComplexMatrix bad(2, 2);
    bad << 1.2, 0, 0, -0.2;
    CHECK_THROWS(DensityMatrix(bad));  // negative eigenvalue
    DensityMatrix ok = DensityMatrix::basis_state(1, 0);
    CHECK(ok.n_qubits() == 1);
}
