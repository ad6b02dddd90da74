#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "qpd/tolerances.hpp"

namespace qpd {

using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Conventions (fixed throughout the library, all modules inherit them)
//
//  * Qubit ordering is little-endian: qubit 0 is the least significant bit of
//    a computational-basis index. tensor(a, b) places `a` on the low qubits.
//
//  * Choi matrices are normalized to the trace-1 convention:
//        Choi(E) = (E (x) id)(|Omega><Omega|),   |Omega> = 2^{-n/2} sum_i |ii>
//    so a trace-preserving map has Choi trace exactly 1 and its marginal over
//    the output factor equals (1/2^n) * identity. Multiply by 2^n_in to get
//    the unnormalized convention Choi(E) = sum_ij E(|i><j|) (x) |i><j|.
//
//  * The Choi row index is out * 2^n_in + in: the output factor is the most
//    significant tensor slot, the input copy the least significant one.
// ---------------------------------------------------------------------------

bool is_hermitian(const ComplexMatrix& m, double tol = Tolerances::defaults().hermitian);
bool is_unitary(const ComplexMatrix& m, double tol = Tolerances::defaults().hermitian);

// Kronecker product; kron(a, b) makes `a` the most significant factor.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

struct DensityMatrix {
    ComplexMatrix matrix;

    explicit DensityMatrix(ComplexMatrix m, const Tolerances& tol = Tolerances::defaults());

    int dim() const { return static_cast<int>(matrix.rows()); }
    int n_qubits() const;

    // Computational basis state |k> on n qubits.
    static DensityMatrix basis_state(int n_qubits, int k);
    static DensityMatrix maximally_mixed(int n_qubits);
};

struct ChoiMatrix {
    int n_in = 0;   // qubits entering the map
    int n_out = 0;  // qubits leaving the map
    ComplexMatrix matrix;

    ChoiMatrix() = default;
    ChoiMatrix(int n_in_, int n_out_, ComplexMatrix m);

    int dim_in() const { return 1 << n_in; }
    int dim_out() const { return 1 << n_out; }
    int side() const { return static_cast<int>(matrix.rows()); }

    static ChoiMatrix zero(int n_qubits);
    static ChoiMatrix identity(int n_qubits);
};

struct ChannelRank {
    int value = 0;
};

struct TpcpVerdict {
    bool cp = false;
    bool tp = false;
    double min_eigenvalue = 0.0;  // of the Choi matrix
    double tp_deviation = 0.0;    // || tr_out[Choi] - (1/2^n) I ||_F
    bool tpcp() const { return cp && tp; }
};

// Choi matrix of the map rho -> sum_k K_k rho K_k^dag. Kraus operators must
// share shape and satisfy sum K^dag K <= I (trace-non-increasing maps such as
// measurement postselection are allowed).
ChoiMatrix choi_from_kraus(const std::vector<ComplexMatrix>& kraus,
                           const Tolerances& tol = Tolerances::defaults());

// Rank-1 Choi matrix of rho -> U rho U^dag.
ChoiMatrix choi_from_unitary(const ComplexMatrix& u,
                             const Tolerances& tol = Tolerances::defaults());

// Kraus operators recovered from the Choi eigendecomposition; eigenvalues
// below cutoff are dropped.
std::vector<ComplexMatrix> kraus_from_choi(const ChoiMatrix& choi,
                                           double cutoff = Tolerances::defaults().rank_cutoff);

// Evaluates the map on a (not necessarily normalized) input matrix.
ComplexMatrix apply_channel(const ChoiMatrix& choi, const ComplexMatrix& rho);

// Choi of (second . first).
ChoiMatrix compose(const ChoiMatrix& second, const ChoiMatrix& first);

// Choi of a (x) b with `a` acting on the low qubits.
ChoiMatrix tensor(const ChoiMatrix& a, const ChoiMatrix& b);

// Partial trace over the given little-endian qubit positions of a matrix on
// n_qubits qubits.
ComplexMatrix partial_trace(const ComplexMatrix& m, int n_qubits,
                            const std::vector<int>& traced_qubits);

// Marginal of a Choi matrix over its output factor; equals (1/2^n_in) * I for
// a trace-preserving map.
ComplexMatrix tp_marginal(const ChoiMatrix& choi);

TpcpVerdict is_tpcp(const ChoiMatrix& choi, const Tolerances& tol = Tolerances::defaults());
ChannelRank channel_rank(const ChoiMatrix& choi,
                         double cutoff = Tolerances::defaults().rank_cutoff);

// Row-major transfer matrix T with vec(E(rho)) = T vec(rho), vec row-major.
// Used for composition and for applying channels to vectorized states.
ComplexMatrix transfer_from_choi(const ChoiMatrix& choi);
ChoiMatrix choi_from_transfer(const ComplexMatrix& t, int n_in, int n_out);

}  // namespace qpd
