#include "qpd/conic.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace qpd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::max_iter: return "max_iter";
    }
    return "?";
}

RealMatrix hermitian_embed(const ComplexMatrix& h) {
    if (!is_hermitian(h, 1e-9)) throw std::invalid_argument("hermitian_embed: input not Hermitian");
    const Eigen::Index s = h.rows();
    RealMatrix e(2 * s, 2 * s);
    e.topLeftCorner(s, s) = h.real();
    e.bottomRightCorner(s, s) = h.real();
    e.topRightCorner(s, s) = -h.imag();
    e.bottomLeftCorner(s, s) = h.imag();
    return e;
}

Eigen::VectorXd HermitianIndexer::components(const ComplexMatrix& h) const {
    Eigen::VectorXd v(size());
    for (int i = 0; i < side; ++i) {
        v(diag(i)) = h(i, i).real();
        for (int j = i + 1; j < side; ++j) {
            v(upper(i, j, false)) = h(i, j).real();
            v(upper(i, j, true)) = h(i, j).imag();
        }
    }
    return v;
}

ComplexMatrix HermitianIndexer::matrix(const Eigen::VectorXd& comps) const {
    ComplexMatrix h(side, side);
    for (int i = 0; i < side; ++i) {
        h(i, i) = comps(diag(i));
        for (int j = i + 1; j < side; ++j) {
            const Complex v(comps(upper(i, j, false)), comps(upper(i, j, true)));
            h(i, j) = v;
            h(j, i) = std::conj(v);
        }
    }
    return h;
}

ComplexMatrix HermitianIndexer::elementary(int idx) const {
    Eigen::VectorXd comps = Eigen::VectorXd::Zero(size());
    comps(idx) = 1.0;
    return matrix(comps);
}

ConicProgram::ConicProgram(int n_vars) : cost_(Eigen::VectorXd::Zero(n_vars)) {
    if (n_vars <= 0) throw std::invalid_argument("program needs at least one variable");
}

void ConicProgram::set_cost(int var, double coeff) { cost_(var) = coeff; }

int ConicProgram::add_dense_block(int side) {
    if (side <= 0) throw std::invalid_argument("block side must be positive");
    DenseBlock b;
    b.side = side;
    b.f0 = RealMatrix::Zero(side, side);
    b.var_slot.assign(n_vars(), 0);
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
}

std::vector<ConicProgram::Triplet>& ConicProgram::term_slot(int block, int var) {
    DenseBlock& b = blocks_.at(block);
    if (b.var_slot[var] == 0) {
        b.vars.push_back(var);
        b.terms.emplace_back();
        b.var_slot[var] = static_cast<int>(b.vars.size());
    }
    return b.terms[b.var_slot[var] - 1];
}

void ConicProgram::add_const(int block, const RealMatrix& f0) {
    DenseBlock& b = blocks_.at(block);
    if (f0.rows() != b.side || f0.cols() != b.side)
        throw std::invalid_argument("block constant shape mismatch");
    b.f0 += f0;
}

void ConicProgram::add_term(int block, int var, const RealMatrix& fj) {
    DenseBlock& b = blocks_.at(block);
    if (fj.rows() != b.side || fj.cols() != b.side)
        throw std::invalid_argument("block term shape mismatch");
    auto& trips = term_slot(block, var);
    for (int r = 0; r < b.side; ++r)
        for (int c = 0; c < b.side; ++c)
            if (fj(r, c) != 0.0) trips.push_back({r, c, fj(r, c)});
}

void ConicProgram::add_const_hermitian(int block, const ComplexMatrix& h) {
    add_const(block, hermitian_embed(h));
}

void ConicProgram::add_term_hermitian(int block, int var, const ComplexMatrix& h) {
    add_term(block, var, hermitian_embed(h));
}

void ConicProgram::add_inequality(const std::vector<std::pair<int, double>>& terms,
                                  double const_term) {
    DiagRow row;
    row.f0 = const_term;
    row.terms = terms;
    diag_rows_.push_back(std::move(row));
}

void ConicProgram::add_equality(const std::vector<std::pair<int, double>>& terms, double rhs) {
    eq_rows_.push_back(terms);
    eq_rhs_.push_back(rhs);
}

void ConicProgram::dump(std::ostream& os) const {
    os << "conic_program n_vars=" << n_vars() << " n_blocks=" << blocks_.size()
       << " n_diag=" << diag_rows_.size() << " n_eq=" << eq_rows_.size() << "\n";
    os << "cost";
    for (int j = 0; j < n_vars(); ++j)
        if (cost_(j) != 0.0) os << " " << j << ":" << cost_(j);
    os << "\n";
    for (size_t k = 0; k < blocks_.size(); ++k) {
        const auto& b = blocks_[k];
        os << "block " << k << " side=" << b.side << "\n";
        os << "  f0";
        for (int r = 0; r < b.side; ++r)
            for (int c = 0; c < b.side; ++c)
                if (b.f0(r, c) != 0.0) os << " (" << r << "," << c << ")=" << b.f0(r, c);
        os << "\n";
        for (size_t t = 0; t < b.vars.size(); ++t) {
            os << "  var " << b.vars[t];
            for (const auto& tr : b.terms[t]) os << " (" << tr.r << "," << tr.c << ")=" << tr.v;
            os << "\n";
        }
    }
    for (size_t r = 0; r < diag_rows_.size(); ++r) {
        os << "ineq " << r << " const=" << diag_rows_[r].f0;
        for (auto [j, v] : diag_rows_[r].terms) os << " " << j << ":" << v;
        os << "\n";
    }
    for (size_t r = 0; r < eq_rows_.size(); ++r) {
        os << "eq " << r << " rhs=" << eq_rhs_[r];
        for (auto [j, v] : eq_rows_[r]) os << " " << j << ":" << v;
        os << "\n";
    }
}

// ---------------------------------------------------------------------------
// interior-point solver
// ---------------------------------------------------------------------------

class IpmWorkspace {
public:
    IpmWorkspace(const ConicProgram& p, const SolverOptions& opts) : p_(p), opts_(opts) {}

    SolverSolution run();

private:
    const ConicProgram& p_;
    const SolverOptions& opts_;

    int n_ = 0, m_ = 0;
    RealMatrix a_;  // equality matrix, dependent rows removed
    Eigen::VectorXd b_;
    RealMatrix a_full_;  // as stated, for residual reporting
    Eigen::VectorXd b_full_;

    Eigen::VectorXd x_, y_;
    std::vector<RealMatrix> s_blk_, z_blk_;
    Eigen::VectorXd s_diag_, z_diag_;
    double cone_dim_ = 0.0;

    // per-iteration caches
    std::vector<RealMatrix> sinv_, r_blk_;
    std::vector<std::vector<RealMatrix>> t_mats_;  // per block, per slot: Z * Fj * Sinv
    Eigen::VectorXd r_diag_, rd_, rb_;
    RealMatrix m_mat_;

    bool use_schur_ = false;
    Eigen::LLT<RealMatrix> llt_m_, llt_g_;
    Eigen::PartialPivLU<RealMatrix> lu_aug_;
    RealMatrix minv_at_;  // M^-1 A^T for the Schur path

    double trip_dot(const std::vector<ConicProgram::Triplet>& trips, const RealMatrix& t) const {
        double acc = 0.0;
        for (const auto& tr : trips) acc += tr.v * t(tr.c, tr.r);
        return acc;
    }

    void compute_residuals(double& mu, double& pres, double& dres, double& pobj, double& dobj);
    void factor_kkt();
    void solve_kkt(const Eigen::VectorXd& rhs_x, const Eigen::VectorXd& rhs_y, Eigen::VectorXd& dx,
                   Eigen::VectorXd& dy) const;
    // builds the search direction for complementarity targets given by
    // es_blk[k] = E_k S_k^-1 and e_diag (already divided by s)
    void direction(const std::vector<RealMatrix>& es_blk, const Eigen::VectorXd& e_over_s,
                   Eigen::VectorXd& dx, Eigen::VectorXd& dy, std::vector<RealMatrix>& ds_blk,
                   std::vector<RealMatrix>& dz_blk, Eigen::VectorXd& ds_diag,
                   Eigen::VectorXd& dz_diag) const;
    static double max_step_dense(const RealMatrix& p, const RealMatrix& dp);
    double primal_step(const std::vector<RealMatrix>& ds_blk, const Eigen::VectorXd& ds_diag) const;
    double dual_step(const std::vector<RealMatrix>& dz_blk, const Eigen::VectorXd& dz_diag) const;

    SolverSolution finish(SolveStatus status, int iters) const;
};

void IpmWorkspace::compute_residuals(double& mu, double& pres, double& dres, double& pobj,
                                     double& dobj) {
    const auto& blocks = p_.blocks_;
    double comp = 0.0;
    pres = 0.0;

    r_blk_.resize(blocks.size());
    for (size_t k = 0; k < blocks.size(); ++k) {
        const auto& blk = blocks[k];
        RealMatrix f = blk.f0;
        for (size_t t = 0; t < blk.vars.size(); ++t) {
            const double xv = x_(blk.vars[t]);
            if (xv == 0.0) continue;
            for (const auto& tr : blk.terms[t]) f(tr.r, tr.c) += xv * tr.v;
        }
        r_blk_[k] = f - s_blk_[k];
        pres = std::max(pres, r_blk_[k].cwiseAbs().maxCoeff());
        comp += (s_blk_[k].array() * z_blk_[k].array()).sum();
    }

    const auto& rows = p_.diag_rows_;
    r_diag_.resize(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        double v = rows[r].f0;
        for (auto [j, cf] : rows[r].terms) v += cf * x_(j);
        r_diag_(r) = v - s_diag_(r);
        pres = std::max(pres, std::abs(r_diag_(r)));
    }
    comp += s_diag_.dot(z_diag_);
    mu = cone_dim_ > 0 ? comp / cone_dim_ : 0.0;

    rb_ = b_ - a_ * x_;
    if (m_ > 0) pres = std::max(pres, rb_.cwiseAbs().maxCoeff());

    rd_ = p_.cost_;
    for (size_t k = 0; k < blocks.size(); ++k) {
        const auto& blk = blocks[k];
        for (size_t t = 0; t < blk.vars.size(); ++t)
            rd_(blk.vars[t]) -= trip_dot(blk.terms[t], z_blk_[k]);
    }
    for (size_t r = 0; r < rows.size(); ++r)
        for (auto [j, cf] : rows[r].terms) rd_(j) -= cf * z_diag_(r);
    if (m_ > 0) rd_ -= a_.transpose() * y_;
    dres = rd_.size() > 0 ? rd_.cwiseAbs().maxCoeff() : 0.0;

    pobj = p_.cost_.dot(x_);
    dobj = m_ > 0 ? b_.dot(y_) : 0.0;
    for (size_t k = 0; k < blocks.size(); ++k)
        dobj -= (blocks[k].f0.array() * z_blk_[k].array()).sum();
    for (size_t r = 0; r < rows.size(); ++r) dobj -= rows[r].f0 * z_diag_(r);
}

void IpmWorkspace::factor_kkt() {
    const auto& blocks = p_.blocks_;
    m_mat_ = RealMatrix::Zero(n_, n_);

    t_mats_.resize(blocks.size());
    for (size_t k = 0; k < blocks.size(); ++k) {
        const auto& blk = blocks[k];
        const int side = blk.side;
        Eigen::LLT<RealMatrix> llt(s_blk_[k]);
        sinv_[k] = llt.solve(RealMatrix::Identity(side, side));

        auto& tms = t_mats_[k];
        tms.assign(blk.vars.size(), RealMatrix());
        RealMatrix dense_f(side, side);
        for (size_t t = 0; t < blk.vars.size(); ++t) {
            const auto& trips = blk.terms[t];
            RealMatrix& tm = tms[t];
            if (static_cast<int>(trips.size()) >= side) {
                dense_f.setZero();
                for (const auto& tr : trips) dense_f(tr.r, tr.c) += tr.v;
                tm.noalias() = z_blk_[k] * dense_f * sinv_[k];
            } else {
                tm = RealMatrix::Zero(side, side);
                for (const auto& tr : trips)
                    tm.noalias() += tr.v * (z_blk_[k].col(tr.r) * sinv_[k].row(tr.c));
            }
        }

        // M(vi, vj) += <F_i, Z F_j S^-1>, evaluated with the sparser factor
        for (size_t ti = 0; ti < blk.vars.size(); ++ti)
            for (size_t tj = ti; tj < blk.vars.size(); ++tj) {
                const bool i_sparser = blk.terms[ti].size() <= blk.terms[tj].size();
                const double v = i_sparser ? trip_dot(blk.terms[ti], tms[tj])
                                           : trip_dot(blk.terms[tj], tms[ti]);
                const int vi = blk.vars[ti], vj = blk.vars[tj];
                m_mat_(vi, vj) += v;
                if (vi != vj) m_mat_(vj, vi) += v;
            }
    }

    const auto& rows = p_.diag_rows_;
    for (size_t r = 0; r < rows.size(); ++r) {
        const double w = z_diag_(r) / s_diag_(r);
        const auto& terms = rows[r].terms;
        for (size_t a = 0; a < terms.size(); ++a)
            for (size_t b = a; b < terms.size(); ++b) {
                const double v = w * terms[a].second * terms[b].second;
                m_mat_(terms[a].first, terms[b].first) += v;
                if (terms[a].first != terms[b].first) m_mat_(terms[b].first, terms[a].first) += v;
            }
    }
    m_mat_ = 0.5 * (m_mat_ + m_mat_.transpose().eval());

    use_schur_ = false;
    llt_m_.compute(m_mat_);
    if (llt_m_.info() == Eigen::Success) {
        if (m_ == 0) {
            use_schur_ = true;
        } else {
            minv_at_ = llt_m_.solve(a_.transpose());
            RealMatrix g = a_ * minv_at_;
            g = 0.5 * (g + g.transpose().eval());
            llt_g_.compute(g);
            use_schur_ = llt_g_.info() == Eigen::Success;
        }
    }
    if (!use_schur_) {
        const double delta1 = 1e-12 * (1.0 + m_mat_.diagonal().cwiseAbs().maxCoeff());
        RealMatrix aug = RealMatrix::Zero(n_ + m_, n_ + m_);
        aug.topLeftCorner(n_, n_) = m_mat_ + delta1 * RealMatrix::Identity(n_, n_);
        if (m_ > 0) {
            const double delta2 = 1e-12 * (1.0 + a_.cwiseAbs().maxCoeff());
            aug.topRightCorner(n_, m_) = -a_.transpose();
            aug.bottomLeftCorner(m_, n_) = a_;
            aug.bottomRightCorner(m_, m_) = delta2 * RealMatrix::Identity(m_, m_);
        }
        lu_aug_.compute(aug);
    }
}

void IpmWorkspace::solve_kkt(const Eigen::VectorXd& rhs_x, const Eigen::VectorXd& rhs_y,
                             Eigen::VectorXd& dx, Eigen::VectorXd& dy) const {
    // [ M  -A^T ] [dx]   [rhs_x]
    // [ A   0   ] [dy] = [rhs_y]
    auto solve_once = [&](const Eigen::VectorXd& rx, const Eigen::VectorXd& ry,
                          Eigen::VectorXd& ox, Eigen::VectorXd& oy) {
        if (use_schur_) {
            if (m_ == 0) {
                ox = llt_m_.solve(rx);
                oy.resize(0);
                return;
            }
            Eigen::VectorXd minv_rx = llt_m_.solve(rx);
            oy = llt_g_.solve(ry - a_ * minv_rx);
            ox = minv_rx + minv_at_ * oy;
            return;
        }
        Eigen::VectorXd rhs(n_ + m_);
        rhs.head(n_) = rx;
        if (m_ > 0) rhs.tail(m_) = ry;
        Eigen::VectorXd sol = lu_aug_.solve(rhs);
        ox = sol.head(n_);
        oy = m_ > 0 ? Eigen::VectorXd(sol.tail(m_)) : Eigen::VectorXd();
    };

    solve_once(rhs_x, rhs_y, dx, dy);
    // iterative refinement recovers digits lost to the ill-conditioned
    // late-stage KKT systems
    double prev_res = kInf;
    for (int round = 0; round < 3; ++round) {
        Eigen::VectorXd res_x = rhs_x - m_mat_ * dx;
        if (m_ > 0) res_x += a_.transpose() * dy;
        Eigen::VectorXd res_y = m_ > 0 ? Eigen::VectorXd(rhs_y - a_ * dx) : Eigen::VectorXd();
        const double res_norm = res_x.cwiseAbs().maxCoeff() +
                                (m_ > 0 ? res_y.cwiseAbs().maxCoeff() : 0.0);
        if (!std::isfinite(res_norm) || res_norm >= 0.25 * prev_res) break;
        prev_res = res_norm;
        Eigen::VectorXd cx, cy;
        solve_once(res_x, res_y, cx, cy);
        dx += cx;
        if (m_ > 0) dy += cy;
    }
}

void IpmWorkspace::direction(const std::vector<RealMatrix>& es_blk, const Eigen::VectorXd& e_over_s,
                             Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                             std::vector<RealMatrix>& ds_blk, std::vector<RealMatrix>& dz_blk,
                             Eigen::VectorXd& ds_diag, Eigen::VectorXd& dz_diag) const {
    const auto& blocks = p_.blocks_;
    const auto& rows = p_.diag_rows_;

    Eigen::VectorXd h = Eigen::VectorXd::Zero(n_);
    std::vector<RealMatrix> w_blk(blocks.size());
    for (size_t k = 0; k < blocks.size(); ++k) {
        w_blk[k] = es_blk[k] - z_blk_[k] * r_blk_[k] * sinv_[k];
        const auto& blk = blocks[k];
        for (size_t t = 0; t < blk.vars.size(); ++t)
            h(blk.vars[t]) += trip_dot(blk.terms[t], w_blk[k]);
    }
    for (size_t r = 0; r < rows.size(); ++r) {
        const double w = e_over_s(r) - z_diag_(r) * r_diag_(r) / s_diag_(r);
        for (auto [j, cf] : rows[r].terms) h(j) += cf * w;
    }

    solve_kkt(h - rd_, rb_, dx, dy);

    ds_blk.resize(blocks.size());
    dz_blk.resize(blocks.size());
    for (size_t k = 0; k < blocks.size(); ++k) {
        const auto& blk = blocks[k];
        RealMatrix ds = r_blk_[k];
        for (size_t t = 0; t < blk.vars.size(); ++t) {
            const double v = dx(blk.vars[t]);
            if (v == 0.0) continue;
            for (const auto& tr : blk.terms[t]) ds(tr.r, tr.c) += v * tr.v;
        }
        ds = 0.5 * (ds + ds.transpose().eval());
        RealMatrix dz = es_blk[k] - z_blk_[k] * ds * sinv_[k];
        dz = 0.5 * (dz + dz.transpose().eval());
        ds_blk[k] = std::move(ds);
        dz_blk[k] = std::move(dz);
    }

    ds_diag.resize(rows.size());
    dz_diag.resize(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        double ds = r_diag_(r);
        for (auto [j, cf] : rows[r].terms) ds += cf * dx(j);
        ds_diag(r) = ds;
        dz_diag(r) = e_over_s(r) - z_diag_(r) * ds / s_diag_(r);
    }
}

double IpmWorkspace::max_step_dense(const RealMatrix& p, const RealMatrix& dp) {
    Eigen::GeneralizedSelfAdjointEigenSolver<RealMatrix> ges;
    ges.compute(-dp, p, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    const double lmax = ges.eigenvalues().maxCoeff();
    return lmax <= 1e-13 ? kInf : 1.0 / lmax;
}

double IpmWorkspace::primal_step(const std::vector<RealMatrix>& ds_blk,
                                 const Eigen::VectorXd& ds_diag) const {
    double a = kInf;
    for (size_t k = 0; k < s_blk_.size(); ++k) a = std::min(a, max_step_dense(s_blk_[k], ds_blk[k]));
    for (Eigen::Index r = 0; r < s_diag_.size(); ++r)
        if (ds_diag(r) < 0.0) a = std::min(a, -s_diag_(r) / ds_diag(r));
    return a;
}

double IpmWorkspace::dual_step(const std::vector<RealMatrix>& dz_blk,
                               const Eigen::VectorXd& dz_diag) const {
    double a = kInf;
    for (size_t k = 0; k < z_blk_.size(); ++k) a = std::min(a, max_step_dense(z_blk_[k], dz_blk[k]));
    for (Eigen::Index r = 0; r < z_diag_.size(); ++r)
        if (dz_diag(r) < 0.0) a = std::min(a, -z_diag_(r) / dz_diag(r));
    return a;
}

SolverSolution IpmWorkspace::finish(SolveStatus status, int iters) const {
    SolverSolution sol;
    sol.status = status;
    sol.x = x_;

    // final primal polish: project onto the equality manifold (a correction
    // of the order of the remaining equality residual)
    if (status == SolveStatus::optimal && m_ > 0) {
        Eigen::VectorXd res = b_ - a_ * sol.x;
        RealMatrix aat = a_ * a_.transpose();
        aat.diagonal().array() += 1e-14 * (1.0 + aat.diagonal().maxCoeff());
        sol.x += a_.transpose() * aat.ldlt().solve(res);
    }

    sol.objective = p_.cost_.dot(sol.x);
    sol.iterations = iters;
    sol.eq_residual =
        a_full_.rows() > 0 ? (b_full_ - a_full_ * sol.x).cwiseAbs().maxCoeff() : 0.0;

    double min_eig = kInf;
    for (const auto& blk : p_.blocks_) {
        RealMatrix f = blk.f0;
        for (size_t t = 0; t < blk.vars.size(); ++t) {
            const double xv = sol.x(blk.vars[t]);
            for (const auto& tr : blk.terms[t]) f(tr.r, tr.c) += xv * tr.v;
        }
        f = 0.5 * (f + f.transpose().eval());
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(f, Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    for (size_t r = 0; r < p_.diag_rows_.size(); ++r) {
        double v = p_.diag_rows_[r].f0;
        for (auto [j, cf] : p_.diag_rows_[r].terms) v += cf * sol.x(j);
        min_eig = std::min(min_eig, v);
    }
    sol.cone_residual = min_eig == kInf ? 0.0 : min_eig;

    double pobj = sol.objective;
    double dobj = m_ > 0 ? b_.dot(y_) : 0.0;
    for (size_t k = 0; k < p_.blocks_.size(); ++k)
        dobj -= (p_.blocks_[k].f0.array() * z_blk_[k].array()).sum();
    for (size_t r = 0; r < p_.diag_rows_.size(); ++r) dobj -= p_.diag_rows_[r].f0 * z_diag_(r);
    sol.rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    return sol;
}

SolverSolution IpmWorkspace::run() {
    n_ = p_.n_vars();
    const int m_full = static_cast<int>(p_.eq_rows_.size());

    RealMatrix a_full = RealMatrix::Zero(m_full, n_);
    Eigen::VectorXd b_full = Eigen::VectorXd::Zero(m_full);
    for (int r = 0; r < m_full; ++r) {
        for (auto [j, v] : p_.eq_rows_[r]) a_full(r, j) += v;
        b_full(r) = p_.eq_rhs_[r];
    }
    a_full_ = a_full;
    b_full_ = b_full;

    // drop linearly dependent equality rows; consistency of the dropped rows
    // is still checked through the reported residual of the full system
    m_ = m_full;
    a_ = a_full;
    b_ = b_full;
    if (m_full > 1) {
        Eigen::ColPivHouseholderQR<RealMatrix> qr(a_full.transpose());
        qr.setThreshold(1e-12 * std::max(1.0, a_full.cwiseAbs().maxCoeff()));
        const int rank = static_cast<int>(qr.rank());
        if (rank < m_full) {
            std::vector<int> kept(qr.colsPermutation().indices().data(),
                                  qr.colsPermutation().indices().data() + rank);
            std::sort(kept.begin(), kept.end());
            a_.resize(rank, n_);
            b_.resize(rank);
            for (int r = 0; r < rank; ++r) {
                a_.row(r) = a_full.row(kept[r]);
                b_(r) = b_full(kept[r]);
            }
            m_ = rank;
        }
    }

    x_ = Eigen::VectorXd::Zero(n_);
    y_ = Eigen::VectorXd::Zero(m_);
    s_blk_.clear();
    z_blk_.clear();
    cone_dim_ = 0.0;
    for (const auto& blk : p_.blocks_) {
        s_blk_.push_back(RealMatrix::Identity(blk.side, blk.side));
        z_blk_.push_back(RealMatrix::Identity(blk.side, blk.side));
        cone_dim_ += blk.side;
    }
    const int n_rows = static_cast<int>(p_.diag_rows_.size());
    s_diag_ = Eigen::VectorXd::Ones(n_rows);
    z_diag_ = Eigen::VectorXd::Ones(n_rows);
    cone_dim_ += n_rows;
    sinv_.resize(p_.blocks_.size());

    if (cone_dim_ == 0.0) {
        // purely linear-equality problem; not expected in practice
        return finish(SolveStatus::max_iter, 0);
    }

    const double cost_scale = 1.0 + (n_ > 0 ? p_.cost_.cwiseAbs().maxCoeff() : 0.0);
    double data_scale = 1.0 + (m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
    for (const auto& blk : p_.blocks_) data_scale = std::max(data_scale, blk.f0.cwiseAbs().maxCoeff());
    for (const auto& row : p_.diag_rows_) data_scale = std::max(data_scale, std::abs(row.f0));

    // best iterate so far, restored on divergence or stall
    struct Snapshot {
        Eigen::VectorXd x, y, s_diag, z_diag;
        std::vector<RealMatrix> s_blk, z_blk;
        double metric = kInf, rel_pres = kInf, rel_dres = kInf, rel_gap = kInf;
    } best;

    auto save_best = [&](double metric, double rel_pres, double rel_dres, double rel_gap) {
        best.x = x_;
        best.y = y_;
        best.s_diag = s_diag_;
        best.z_diag = z_diag_;
        best.s_blk = s_blk_;
        best.z_blk = z_blk_;
        best.metric = metric;
        best.rel_pres = rel_pres;
        best.rel_dres = rel_dres;
        best.rel_gap = rel_gap;
    };
    auto restore_best = [&] {
        if (best.metric == kInf) return;
        x_ = best.x;
        y_ = best.y;
        s_diag_ = best.s_diag;
        z_diag_ = best.z_diag;
        s_blk_ = best.s_blk;
        z_blk_ = best.z_blk;
    };

    int stall = 0;
    std::vector<RealMatrix> es(p_.blocks_.size());
    std::vector<RealMatrix> ds_a, dz_a, ds_c, dz_c;
    Eigen::VectorXd dsd_a, dzd_a, dsd_c, dzd_c, dx_a, dy_a, dx_c, dy_c, eos;

    for (int iter = 0; iter < opts_.max_iterations; ++iter) {
        double mu, pres, dres, pobj, dobj;
        compute_residuals(mu, pres, dres, pobj, dobj);
        const double rel_pres = pres / data_scale;
        const double rel_dres = dres / cost_scale;
        const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        const double metric = std::max({rel_pres, rel_dres, rel_gap});

        if (opts_.verbose)
            fprintf(stderr, "ipm %3d mu=%9.2e pres=%9.2e dres=%9.2e gap=%9.2e\n", iter, mu,
                    rel_pres, rel_dres, rel_gap);

        // the solution contract on the returned point: equality residual and
        // cone feasibility of F(x) itself, duality gap in the accepted band
        auto contract_exit = [&](int at_iter, SolverSolution* out) {
            SolverSolution sol = finish(SolveStatus::optimal, at_iter);
            const double b_scale = std::max(1.0, m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
            if (sol.eq_residual <= opts_.stop_tol * b_scale &&
                sol.cone_residual >= -opts_.stop_tol &&
                sol.rel_gap <= Tolerances::defaults().solver_gap) {
                *out = std::move(sol);
                return true;
            }
            return false;
        };

        if (!std::isfinite(metric) || !std::isfinite(mu)) {
            restore_best();
            SolverSolution sol;
            if (contract_exit(iter, &sol)) return sol;
            return finish(best.rel_pres > 1e3 * opts_.stop_tol ? SolveStatus::infeasible
                                                               : SolveStatus::max_iter,
                          iter);
        }
        if (metric <= opts_.stop_tol) return finish(SolveStatus::optimal, iter);
        // near-converged iterates at the numerical floor may already satisfy
        // the contract even though the internal metric cannot reach stop_tol
        if (rel_pres <= 5 * opts_.stop_tol && rel_dres <= 100 * opts_.stop_tol &&
            rel_gap <= Tolerances::defaults().solver_gap && mu <= 1e-8) {
            SolverSolution sol;
            if (contract_exit(iter, &sol)) return sol;
        }

        if (metric < 0.99 * best.metric) {
            save_best(metric, rel_pres, rel_dres, rel_gap);
            stall = 0;
        } else if (++stall > 30) {
            restore_best();
            SolverSolution sol;
            if (contract_exit(iter, &sol)) return sol;
            return finish(best.rel_pres > 1e3 * opts_.stop_tol ? SolveStatus::infeasible
                                                               : SolveStatus::max_iter,
                          iter);
        }
        if ((mu > 1e7 && rel_pres > 1e3 * opts_.stop_tol) ||
            (x_.size() > 0 && x_.cwiseAbs().maxCoeff() > 1e12)) {
            restore_best();
            return finish(SolveStatus::infeasible, iter);
        }

        factor_kkt();

        // predictor
        for (size_t k = 0; k < es.size(); ++k) es[k] = -z_blk_[k];
        eos = -z_diag_;
        direction(es, eos, dx_a, dy_a, ds_a, dz_a, dsd_a, dzd_a);
        const double ap_aff = std::min(1.0, primal_step(ds_a, dsd_a));
        const double ad_aff = std::min(1.0, dual_step(dz_a, dzd_a));

        double comp_aff = 0.0;
        for (size_t k = 0; k < es.size(); ++k)
            comp_aff += ((s_blk_[k] + ap_aff * ds_a[k]).array() *
                         (z_blk_[k] + ad_aff * dz_a[k]).array())
                            .sum();
        comp_aff += (s_diag_ + ap_aff * dsd_a).dot(z_diag_ + ad_aff * dzd_a);
        const double mu_aff = comp_aff / cone_dim_;
        double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
        sigma = std::clamp(sigma, 1e-10, 1.0);

        // corrector; keep complementarity from outrunning feasibility, which
        // otherwise lets late iterates drift off the equality manifold
        sigma = std::min(sigma, 0.8);
        if (mu < 0.5 * pres) sigma = std::clamp(pres / (2.0 * mu), sigma, 0.8);
        for (size_t k = 0; k < es.size(); ++k)
            es[k] = sigma * mu * sinv_[k] - z_blk_[k] - dz_a[k] * ds_a[k] * sinv_[k];
        eos = ((sigma * mu - dzd_a.array() * dsd_a.array()) / s_diag_.array()).matrix() - z_diag_;
        direction(es, eos, dx_c, dy_c, ds_c, dz_c, dsd_c, dzd_c);

        const double tau = 0.98;
        double ap = std::min(1.0, tau * primal_step(ds_c, dsd_c));
        double ad = std::min(1.0, tau * dual_step(dz_c, dzd_c));
        if (std::min(ap, ad) < 0.05) {
            // blocked step: retry as a near-centering direction
            for (size_t k = 0; k < es.size(); ++k)
                es[k] = 0.9 * mu * sinv_[k] - z_blk_[k];
            eos = (0.9 * mu / s_diag_.array()).matrix() - z_diag_;
            direction(es, eos, dx_c, dy_c, ds_c, dz_c, dsd_c, dzd_c);
            ap = std::min(1.0, tau * primal_step(ds_c, dsd_c));
            ad = std::min(1.0, tau * dual_step(dz_c, dzd_c));
        }

        x_ += ap * dx_c;
        if (m_ > 0) y_ += ad * dy_c;
        for (size_t k = 0; k < es.size(); ++k) {
            s_blk_[k] += ap * ds_c[k];
            z_blk_[k] += ad * dz_c[k];
            s_blk_[k] = 0.5 * (s_blk_[k] + s_blk_[k].transpose().eval());
            z_blk_[k] = 0.5 * (z_blk_[k] + z_blk_[k].transpose().eval());
        }
        s_diag_ += ap * dsd_c;
        z_diag_ += ad * dzd_c;
    }
    restore_best();
    {
        SolverSolution sol = finish(SolveStatus::optimal, opts_.max_iterations);
        const double b_scale = std::max(1.0, m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
        if (sol.eq_residual <= opts_.stop_tol * b_scale && sol.cone_residual >= -opts_.stop_tol &&
            sol.rel_gap <= Tolerances::defaults().solver_gap)
            return sol;
    }
    return finish(SolveStatus::max_iter, opts_.max_iterations);
}

SolverSolution ConicProgram::solve(const SolverOptions& opts) const {
    IpmWorkspace ws(*this, opts);
    return ws.run();
}

// ---------------------------------------------------------------------------
// LP / SDP lowering
// ---------------------------------------------------------------------------

void LinearProgram::validate() const {
    const Eigen::Index n = cost.size();
    if (n == 0) throw std::invalid_argument("LP needs at least one variable");
    if (!cost.allFinite()) throw std::invalid_argument("LP cost must be finite");
    if (a_eq.size() > 0 && (a_eq.cols() != n || a_eq.rows() != b_eq.size()))
        throw std::invalid_argument("LP equality dimensions inconsistent");
    if (a_in.size() > 0 && (a_in.cols() != n || a_in.rows() != b_in.size()))
        throw std::invalid_argument("LP inequality dimensions inconsistent");
    if (lower.size() > 0 && lower.size() != n)
        throw std::invalid_argument("LP lower bound size mismatch");
    if (upper.size() > 0 && upper.size() != n)
        throw std::invalid_argument("LP upper bound size mismatch");
    if ((a_eq.size() > 0 && !a_eq.allFinite()) || (b_eq.size() > 0 && !b_eq.allFinite()) ||
        (a_in.size() > 0 && !a_in.allFinite()) || (b_in.size() > 0 && !b_in.allFinite()))
        throw std::invalid_argument("LP data must be finite");
}

SolverSolution solve_lp(const LinearProgram& p, const SolverOptions& opts) {
    p.validate();
    const int n = static_cast<int>(p.cost.size());
    ConicProgram cp(n);
    for (int j = 0; j < n; ++j) cp.set_cost(j, p.cost(j));
    for (Eigen::Index r = 0; r < p.a_eq.rows(); ++r) {
        std::vector<std::pair<int, double>> terms;
        for (int j = 0; j < n; ++j)
            if (p.a_eq(r, j) != 0.0) terms.emplace_back(j, p.a_eq(r, j));
        cp.add_equality(terms, p.b_eq(r));
    }
    for (Eigen::Index r = 0; r < p.a_in.rows(); ++r) {
        // a x <= b  ->  b - a x >= 0
        std::vector<std::pair<int, double>> terms;
        for (int j = 0; j < n; ++j)
            if (p.a_in(r, j) != 0.0) terms.emplace_back(j, -p.a_in(r, j));
        cp.add_inequality(terms, p.b_in(r));
    }
    for (int j = 0; j < n; ++j) {
        if (p.lower.size() > 0 && p.lower(j) > -kInf)
            cp.add_inequality({{j, 1.0}}, -p.lower(j));
        if (p.upper.size() > 0 && p.upper(j) < kInf)
            cp.add_inequality({{j, -1.0}}, p.upper(j));
    }
    return cp.solve(opts);
}

int SemidefiniteProgram::n_scalars() const {
    int n = 0;
    for (int s : psd_sides) n += s * s;
    return n + n_nonneg + n_free;
}

int SemidefiniteProgram::entry_index(int block, int i, int j, bool imag) const {
    int base = 0;
    for (int b = 0; b < block; ++b) base += psd_sides[b] * psd_sides[b];
    const int s = psd_sides[block];
    if (i == j) {
        if (imag) throw std::invalid_argument("diagonal entries are real");
        return base + i;
    }
    if (i > j) std::swap(i, j);
    const int pair_rank = i * s - i * (i + 1) / 2 + (j - i - 1);
    return base + s + 2 * pair_rank + (imag ? 1 : 0);
}

int SemidefiniteProgram::nonneg_index(int k) const {
    int base = 0;
    for (int s : psd_sides) base += s * s;
    return base + k;
}

int SemidefiniteProgram::free_index(int k) const { return nonneg_index(n_nonneg) + k; }

ComplexMatrix SemidefiniteProgram::block_value(int block, const Eigen::VectorXd& x) const {
    const int s = psd_sides[block];
    ComplexMatrix m(s, s);
    for (int i = 0; i < s; ++i) {
        m(i, i) = x(entry_index(block, i, i));
        for (int j = i + 1; j < s; ++j) {
            const Complex v(x(entry_index(block, i, j, false)), x(entry_index(block, i, j, true)));
            m(i, j) = v;
            m(j, i) = std::conj(v);
        }
    }
    return m;
}

void SemidefiniteProgram::validate() const {
    for (int s : psd_sides)
        if (s <= 0) throw std::invalid_argument("SDP block side must be positive");
    const int n = n_scalars();
    if (cost.size() != n) throw std::invalid_argument("SDP cost size mismatch");
    if (a_eq.size() > 0 && (a_eq.cols() != n || a_eq.rows() != b_eq.size()))
        throw std::invalid_argument("SDP equality dimensions inconsistent");
    if (a_in.size() > 0 && (a_in.cols() != n || a_in.rows() != b_in.size()))
        throw std::invalid_argument("SDP inequality dimensions inconsistent");
}

SolverSolution solve_sdp(const SemidefiniteProgram& p, const SolverOptions& opts) {
    p.validate();
    const int n = p.n_scalars();
    ConicProgram cp(n);
    for (int j = 0; j < n; ++j) cp.set_cost(j, p.cost(j));

    for (size_t b = 0; b < p.psd_sides.size(); ++b) {
        const int s = p.psd_sides[b];
        const int blk = cp.add_dense_block(2 * s);
        for (int i = 0; i < s; ++i) {
            ComplexMatrix e = ComplexMatrix::Zero(s, s);
            e(i, i) = 1.0;
            cp.add_term_hermitian(blk, p.entry_index(static_cast<int>(b), i, i), e);
            for (int j = i + 1; j < s; ++j) {
                ComplexMatrix re = ComplexMatrix::Zero(s, s);
                re(i, j) = 1.0;
                re(j, i) = 1.0;
                cp.add_term_hermitian(blk, p.entry_index(static_cast<int>(b), i, j, false), re);
                ComplexMatrix im = ComplexMatrix::Zero(s, s);
                im(i, j) = Complex(0, 1);
                im(j, i) = Complex(0, -1);
                cp.add_term_hermitian(blk, p.entry_index(static_cast<int>(b), i, j, true), im);
            }
        }
    }
    for (int k = 0; k < p.n_nonneg; ++k) cp.add_inequality({{p.nonneg_index(k), 1.0}}, 0.0);

    for (Eigen::Index r = 0; p.a_eq.size() > 0 && r < p.a_eq.rows(); ++r) {
        std::vector<std::pair<int, double>> terms;
        for (int j = 0; j < n; ++j)
            if (p.a_eq(r, j) != 0.0) terms.emplace_back(j, p.a_eq(r, j));
        cp.add_equality(terms, p.b_eq(r));
    }
    for (Eigen::Index r = 0; p.a_in.size() > 0 && r < p.a_in.rows(); ++r) {
        std::vector<std::pair<int, double>> terms;
        for (int j = 0; j < n; ++j)
            if (p.a_in(r, j) != 0.0) terms.emplace_back(j, -p.a_in(r, j));
        cp.add_inequality(terms, p.b_in(r));
    }
    return cp.solve(opts);
}

}  // namespace qpd
