#include "qpd/channel_algebra.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qpd {

namespace {

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_exact(Eigen::Index n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("dimension is not a power of two");
    int k = 0;
    while ((Eigen::Index{1} << k) < n) ++k;
    return k;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

bool is_hermitian(const ComplexMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const ComplexMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    ComplexMatrix d = m.adjoint() * m - ComplexMatrix::Identity(m.rows(), m.cols());
    return d.cwiseAbs().maxCoeff() <= tol;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

DensityMatrix::DensityMatrix(ComplexMatrix m, const Tolerances& tol) : matrix(std::move(m)) {
    require(matrix.rows() == matrix.cols(), "density matrix must be square");
    log2_exact(matrix.rows());
    require(is_hermitian(matrix, tol.hermitian), "density matrix must be Hermitian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(matrix, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -tol.psd, "density matrix must be PSD");
    require(std::abs(matrix.trace().real() - 1.0) <= tol.trace &&
                std::abs(matrix.trace().imag()) <= tol.trace,
            "density matrix must have unit trace");
}

int DensityMatrix::n_qubits() const { return log2_exact(matrix.rows()); }

DensityMatrix DensityMatrix::basis_state(int n_qubits, int k) {
    const int d = 1 << n_qubits;
    require(k >= 0 && k < d, "basis state index out of range");
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    m(k, k) = 1.0;
    return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
    const int d = 1 << n_qubits;
    return DensityMatrix(ComplexMatrix::Identity(d, d) / static_cast<double>(d));
}

ChoiMatrix::ChoiMatrix(int n_in_, int n_out_, ComplexMatrix m)
    : n_in(n_in_), n_out(n_out_), matrix(std::move(m)) {
    require(matrix.rows() == matrix.cols(), "Choi matrix must be square");
    require(matrix.rows() == (Eigen::Index{1} << (n_in + n_out)),
            "Choi matrix side must be 2^(n_in+n_out)");
}

ChoiMatrix ChoiMatrix::zero(int n_qubits) {
    const Eigen::Index side = Eigen::Index{1} << (2 * n_qubits);
    return ChoiMatrix(n_qubits, n_qubits, ComplexMatrix::Zero(side, side));
}

ChoiMatrix ChoiMatrix::identity(int n_qubits) {
    const int d = 1 << n_qubits;
    return choi_from_unitary(ComplexMatrix::Identity(d, d));
}

ChoiMatrix choi_from_kraus(const std::vector<ComplexMatrix>& kraus, const Tolerances& tol) {
    require(!kraus.empty(), "at least one Kraus operator required");
    const Eigen::Index d_out = kraus.front().rows();
    const Eigen::Index d_in = kraus.front().cols();
    for (const auto& k : kraus)
        require(k.rows() == d_out && k.cols() == d_in, "Kraus operators must share shape");
    const int n_in = log2_exact(d_in);
    const int n_out = log2_exact(d_out);

    ComplexMatrix total = ComplexMatrix::Zero(d_in, d_in);
    for (const auto& k : kraus) total += k.adjoint() * k;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(total, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().maxCoeff() <= 1.0 + tol.psd,
            "sum K^dag K exceeds identity: map is not trace-non-increasing");

    ComplexMatrix choi = ComplexMatrix::Zero(d_out * d_in, d_out * d_in);
    Eigen::VectorXcd w(d_out * d_in);
    for (const auto& k : kraus) {
        for (Eigen::Index o = 0; o < d_out; ++o)
            for (Eigen::Index i = 0; i < d_in; ++i) w(o * d_in + i) = k(o, i);
        choi.noalias() += w * w.adjoint();
    }
    choi /= static_cast<double>(d_in);
    return ChoiMatrix(n_in, n_out, std::move(choi));
}

ChoiMatrix choi_from_unitary(const ComplexMatrix& u, const Tolerances& tol) {
    require(is_unitary(u, tol.psd), "input must be unitary");
    return choi_from_kraus({u}, tol);
}

std::vector<ComplexMatrix> kraus_from_choi(const ChoiMatrix& choi, double cutoff) {
    require(is_hermitian(choi.matrix, 1e-8), "Choi matrix must be Hermitian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(choi.matrix);
    const Eigen::Index d_in = choi.dim_in();
    const Eigen::Index d_out = choi.dim_out();
    std::vector<ComplexMatrix> kraus;
    for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
        const double lam = es.eigenvalues()(k);
        if (lam <= cutoff) break;  // ascending order: all remaining are smaller
        Eigen::VectorXcd w = std::sqrt(lam * static_cast<double>(d_in)) * es.eigenvectors().col(k);
        ComplexMatrix op(d_out, d_in);
        for (Eigen::Index o = 0; o < d_out; ++o)
            for (Eigen::Index i = 0; i < d_in; ++i) op(o, i) = w(o * d_in + i);
        kraus.push_back(std::move(op));
    }
    require(!kraus.empty(), "Choi matrix has no eigenvalue above cutoff");
    return kraus;
}

ComplexMatrix transfer_from_choi(const ChoiMatrix& choi) {
    const Eigen::Index d_in = choi.dim_in();
    const Eigen::Index d_out = choi.dim_out();
    ComplexMatrix t(d_out * d_out, d_in * d_in);
    for (Eigen::Index o = 0; o < d_out; ++o)
        for (Eigen::Index op = 0; op < d_out; ++op)
            for (Eigen::Index i = 0; i < d_in; ++i)
                for (Eigen::Index ip = 0; ip < d_in; ++ip)
                    t(o * d_out + op, i * d_in + ip) =
                        static_cast<double>(d_in) * choi.matrix(o * d_in + i, op * d_in + ip);
    return t;
}

ChoiMatrix choi_from_transfer(const ComplexMatrix& t, int n_in, int n_out) {
    const Eigen::Index d_in = Eigen::Index{1} << n_in;
    const Eigen::Index d_out = Eigen::Index{1} << n_out;
    require(t.rows() == d_out * d_out && t.cols() == d_in * d_in,
            "transfer matrix shape mismatch");
    ComplexMatrix choi(d_out * d_in, d_out * d_in);
    for (Eigen::Index o = 0; o < d_out; ++o)
        for (Eigen::Index op = 0; op < d_out; ++op)
            for (Eigen::Index i = 0; i < d_in; ++i)
                for (Eigen::Index ip = 0; ip < d_in; ++ip)
                    choi(o * d_in + i, op * d_in + ip) =
                        t(o * d_out + op, i * d_in + ip) / static_cast<double>(d_in);
    return ChoiMatrix(n_in, n_out, std::move(choi));
}

ComplexMatrix apply_channel(const ChoiMatrix& choi, const ComplexMatrix& rho) {
    const Eigen::Index d_in = choi.dim_in();
    const Eigen::Index d_out = choi.dim_out();
    require(rho.rows() == d_in && rho.cols() == d_in, "state dimension mismatch");
    ComplexMatrix out = ComplexMatrix::Zero(d_out, d_out);
    for (Eigen::Index o = 0; o < d_out; ++o)
        for (Eigen::Index op = 0; op < d_out; ++op) {
            Complex acc = 0.0;
            for (Eigen::Index i = 0; i < d_in; ++i)
                for (Eigen::Index ip = 0; ip < d_in; ++ip)
                    acc += choi.matrix(o * d_in + i, op * d_in + ip) * rho(i, ip);
            out(o, op) = static_cast<double>(d_in) * acc;
        }
    return out;
}

ChoiMatrix compose(const ChoiMatrix& second, const ChoiMatrix& first) {
    require(second.n_in == first.n_out, "compose: dimension mismatch");
    ComplexMatrix t = transfer_from_choi(second) * transfer_from_choi(first);
    return choi_from_transfer(t, first.n_in, second.n_out);
}

ChoiMatrix tensor(const ChoiMatrix& a, const ChoiMatrix& b) {
    const int n_in = a.n_in + b.n_in;
    const int n_out = a.n_out + b.n_out;
    const Eigen::Index dai = a.dim_in(), dao = a.dim_out();
    const Eigen::Index dbi = b.dim_in(), dbo = b.dim_out();
    const Eigen::Index d_in = dai * dbi;
    ComplexMatrix m(dao * dbo * d_in, dao * dbo * d_in);
    // combined indices: out = ob * dao + oa, in = ib * dai + ia (a on low qubits)
    for (Eigen::Index oa = 0; oa < dao; ++oa)
        for (Eigen::Index ob = 0; ob < dbo; ++ob)
            for (Eigen::Index ia = 0; ia < dai; ++ia)
                for (Eigen::Index ib = 0; ib < dbi; ++ib) {
                    const Eigen::Index row = (ob * dao + oa) * d_in + (ib * dai + ia);
                    for (Eigen::Index oap = 0; oap < dao; ++oap)
                        for (Eigen::Index obp = 0; obp < dbo; ++obp)
                            for (Eigen::Index iap = 0; iap < dai; ++iap)
                                for (Eigen::Index ibp = 0; ibp < dbi; ++ibp) {
                                    const Eigen::Index col =
                                        (obp * dao + oap) * d_in + (ibp * dai + iap);
                                    m(row, col) = a.matrix(oa * dai + ia, oap * dai + iap) *
                                                  b.matrix(ob * dbi + ib, obp * dbi + ibp);
                                }
                }
    return ChoiMatrix(n_in, n_out, std::move(m));
}

ComplexMatrix partial_trace(const ComplexMatrix& m, int n_qubits,
                            const std::vector<int>& traced_qubits) {
    require(m.rows() == m.cols(), "partial trace needs a square matrix");
    require(m.rows() == (Eigen::Index{1} << n_qubits), "matrix side must be 2^n_qubits");
    unsigned traced_mask = 0;
    for (int q : traced_qubits) {
        require(q >= 0 && q < n_qubits, "traced qubit out of range");
        require(!(traced_mask & (1u << q)), "duplicate traced qubit");
        traced_mask |= 1u << q;
    }
    const int n_keep = n_qubits - static_cast<int>(traced_qubits.size());
    std::vector<int> kept;
    for (int q = 0; q < n_qubits; ++q)
        if (!(traced_mask & (1u << q))) kept.push_back(q);

    const Eigen::Index d_keep = Eigen::Index{1} << n_keep;
    const Eigen::Index d_tr = Eigen::Index{1} << traced_qubits.size();
    auto interleave = [&](Eigen::Index keep_idx, Eigen::Index tr_idx) {
        Eigen::Index full = 0;
        for (int b = 0; b < n_keep; ++b)
            if (keep_idx & (Eigen::Index{1} << b)) full |= Eigen::Index{1} << kept[b];
        int tb = 0;
        for (int q = 0; q < n_qubits; ++q)
            if (traced_mask & (1u << q)) {
                if (tr_idx & (Eigen::Index{1} << tb)) full |= Eigen::Index{1} << q;
                ++tb;
            }
        return full;
    };

    ComplexMatrix out = ComplexMatrix::Zero(d_keep, d_keep);
    for (Eigen::Index r = 0; r < d_keep; ++r)
        for (Eigen::Index c = 0; c < d_keep; ++c) {
            Complex acc = 0.0;
            for (Eigen::Index t = 0; t < d_tr; ++t)
                acc += m(interleave(r, t), interleave(c, t));
            out(r, c) = acc;
        }
    return out;
}

ComplexMatrix tp_marginal(const ChoiMatrix& choi) {
    const Eigen::Index d_in = choi.dim_in();
    const Eigen::Index d_out = choi.dim_out();
    ComplexMatrix out = ComplexMatrix::Zero(d_in, d_in);
    for (Eigen::Index i = 0; i < d_in; ++i)
        for (Eigen::Index ip = 0; ip < d_in; ++ip) {
            Complex acc = 0.0;
            for (Eigen::Index o = 0; o < d_out; ++o) acc += choi.matrix(o * d_in + i, o * d_in + ip);
            out(i, ip) = acc;
        }
    return out;
}

TpcpVerdict is_tpcp(const ChoiMatrix& choi, const Tolerances& tol) {
    TpcpVerdict v;
    ComplexMatrix herm = 0.5 * (choi.matrix + choi.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
    v.min_eigenvalue = es.eigenvalues().minCoeff();
    v.cp = v.min_eigenvalue >= -tol.psd &&
           (choi.matrix - choi.matrix.adjoint()).cwiseAbs().maxCoeff() <= 1e-8;
    ComplexMatrix marginal = tp_marginal(choi);
    const double d_in = static_cast<double>(choi.dim_in());
    v.tp_deviation =
        (marginal - ComplexMatrix::Identity(choi.dim_in(), choi.dim_in()) / d_in).norm();
    v.tp = v.tp_deviation <= tol.tp_marginal;
    return v;
}

ChannelRank channel_rank(const ChoiMatrix& choi, double cutoff) {
    ComplexMatrix herm = 0.5 * (choi.matrix + choi.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
    int r = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()(k) > cutoff) ++r;
    return ChannelRank{r};
}

}  // namespace qpd
