#include "qpd/qpd_core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace qpd {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// trace over the most significant tensor factor of an (d1*d2) square matrix
ComplexMatrix trace_out_first(const ComplexMatrix& m, Eigen::Index d1, Eigen::Index d2) {
    ComplexMatrix out = ComplexMatrix::Zero(d2, d2);
    for (Eigen::Index i = 0; i < d2; ++i)
        for (Eigen::Index j = 0; j < d2; ++j)
            for (Eigen::Index o = 0; o < d1; ++o) out(i, j) += m(o * d2 + i, o * d2 + j);
    return out;
}

void check_hp_choi(const ChoiMatrix& choi, const char* who) {
    if (!is_hermitian(choi.matrix, 1e-8))
        throw std::invalid_argument(std::string(who) + ": Choi matrix must be Hermitian "
                                                       "(Hermitian-preserving maps only)");
}

void check_set(const ChoiMatrix& target, const ChannelSet& set, const char* who) {
    require(!set.empty(), std::string(who) + ": decomposition set is empty");
    for (const auto& [label, choi] : set) {
        require(choi.n_in == target.n_in && choi.n_out == target.n_out,
                std::string(who) + ": set element '" + label + "' has mismatched qubit counts");
        check_hp_choi(choi, who);
    }
}

// upper bound ||G||_diamond <= 2^n_in * || Choi ||_tr, cheap certificate for
// near-zero residual maps
double diamond_upper_bound(const ChoiMatrix& choi) {
    ComplexMatrix h = 0.5 * (choi.matrix + choi.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
    return choi.dim_in() * es.eigenvalues().cwiseAbs().sum();
}

struct QpdProgramLayout {
    int h = 0;  // Hermitian parameter count per Y block
    int n = 0;  // set size
    int y0 = 0, y1 = 0, t0 = 0, t1 = 0, a = 0, u = 0;
    int total = 0;
};

QpdProgramLayout make_layout(int d_choi, int n_items) {
    QpdProgramLayout lay;
    lay.h = d_choi * d_choi;
    lay.n = n_items;
    lay.y0 = 0;
    lay.y1 = lay.h;
    lay.t0 = 2 * lay.h;
    lay.t1 = 2 * lay.h + 1;
    lay.a = 2 * lay.h + 2;
    lay.u = lay.a + n_items;
    lay.total = lay.u + n_items;
    return lay;
}

// Shared constraint structure of the diamond-norm objective over
// residual(a) = sum_i a_i Choi_i - Choi_target:
//   [[Y0, residual], [residual^dag, Y1]] psd,
//   t_k I - tr_out[Y_k] psd,
// plus |a_i| <= u_i rows. Passing n_items = 0 yields the plain diamond-norm
// dual of -target.
void build_qpd_blocks(ConicProgram& cp, const QpdProgramLayout& lay, const ChoiMatrix& target,
                      const ChannelSet& set) {
    const int d_choi = target.side();
    const int d_in = target.dim_in();
    const int d_out = target.dim_out();
    HermitianIndexer hi(d_choi);
    HermitianIndexer hi_in(d_in);

    const int big = cp.add_dense_block(2 * 2 * d_choi);
    {
        ComplexMatrix f0 = ComplexMatrix::Zero(2 * d_choi, 2 * d_choi);
        f0.topRightCorner(d_choi, d_choi) = -target.matrix;
        f0.bottomLeftCorner(d_choi, d_choi) = -target.matrix.adjoint();
        cp.add_const_hermitian(big, f0);
    }
    for (int i = 0; i < lay.n; ++i) {
        ComplexMatrix f = ComplexMatrix::Zero(2 * d_choi, 2 * d_choi);
        f.topRightCorner(d_choi, d_choi) = set[i].second.matrix;
        f.bottomLeftCorner(d_choi, d_choi) = set[i].second.matrix.adjoint();
        cp.add_term_hermitian(big, lay.a + i, f);
    }

    const int epi0 = cp.add_dense_block(2 * d_in);
    const int epi1 = cp.add_dense_block(2 * d_in);
    cp.add_term_hermitian(epi0, lay.t0, ComplexMatrix::Identity(d_in, d_in));
    cp.add_term_hermitian(epi1, lay.t1, ComplexMatrix::Identity(d_in, d_in));

    for (int p = 0; p < lay.h; ++p) {
        const ComplexMatrix ep = hi.elementary(p);
        ComplexMatrix fy = ComplexMatrix::Zero(2 * d_choi, 2 * d_choi);
        fy.topLeftCorner(d_choi, d_choi) = ep;
        cp.add_term_hermitian(big, lay.y0 + p, fy);
        fy.setZero();
        fy.bottomRightCorner(d_choi, d_choi) = ep;
        cp.add_term_hermitian(big, lay.y1 + p, fy);

        const ComplexMatrix neg_marg = -trace_out_first(ep, d_out, d_in);
        if (neg_marg.cwiseAbs().maxCoeff() > 0.0) {
            cp.add_term_hermitian(epi0, lay.y0 + p, neg_marg);
            cp.add_term_hermitian(epi1, lay.y1 + p, neg_marg);
        }
    }

    for (int i = 0; i < lay.n; ++i) {
        cp.add_inequality({{lay.u + i, 1.0}, {lay.a + i, -1.0}}, 0.0);
        cp.add_inequality({{lay.u + i, 1.0}, {lay.a + i, 1.0}}, 0.0);
    }
    (void)hi_in;
}

void add_physicality_constraints(ConicProgram& cp, const QpdProgramLayout& lay,
                                 const ChoiMatrix& target, const ChannelSet& set,
                                 const ApproxQpdOptions& options) {
    const int d_choi = target.side();
    const int d_in = target.dim_in();
    const int d_out = target.dim_out();
    if (options.enforce_cp) {
        const int cp_blk = cp.add_dense_block(2 * d_choi);
        for (int i = 0; i < lay.n; ++i) cp.add_term_hermitian(cp_blk, lay.a + i, set[i].second.matrix);
    }
    if (options.enforce_tp) {
        HermitianIndexer hi_in(d_in);
        std::vector<Eigen::VectorXd> marg(lay.n);
        for (int i = 0; i < lay.n; ++i)
            marg[i] = hi_in.components(trace_out_first(set[i].second.matrix, d_out, d_in));
        const Eigen::VectorXd rhs = hi_in.components(
            ComplexMatrix::Identity(d_in, d_in) / static_cast<double>(d_in));
        for (int p = 0; p < hi_in.size(); ++p) {
            std::vector<std::pair<int, double>> terms;
            for (int i = 0; i < lay.n; ++i)
                if (marg[i](p) != 0.0) terms.emplace_back(lay.a + i, marg[i](p));
            cp.add_equality(terms, rhs(p));
        }
    }
}

QuasiprobabilityDecomposition qpd_from_solution(const ChoiMatrix& target, const ChannelSet& set,
                                                const QpdProgramLayout& lay,
                                                const Eigen::VectorXd& x, double residual) {
    QuasiprobabilityDecomposition q;
    q.target = target;
    q.items.reserve(set.size());
    double gamma = 0.0;
    for (int i = 0; i < lay.n; ++i) {
        q.items.push_back({set[i].first, x(lay.a + i), set[i].second});
        gamma += std::abs(x(lay.a + i));
    }
    q.gamma = gamma;
    q.residual_diamond_error = residual;
    return q;
}

}  // namespace

ChoiMatrix QuasiprobabilityDecomposition::recombined() const {
    ChoiMatrix out = target;
    out.matrix.setZero();
    for (const auto& it : items) out.matrix += it.coeff * it.choi.matrix;
    return out;
}

double diamond_norm(const ChoiMatrix& choi, const SolverOptions& opts) {
    check_hp_choi(choi, "diamond_norm");
    // the norm is absolutely homogeneous; normalize the data scale
    const double scale = choi.matrix.cwiseAbs().maxCoeff();
    if (scale <= 1e-14) return 0.0;
    ChoiMatrix scaled = choi;
    scaled.matrix /= scale;

    const QpdProgramLayout lay = make_layout(choi.side(), 0);
    ConicProgram cp(lay.total);
    // with an empty set the block's off-diagonal is exactly -Choi, Eq-style
    build_qpd_blocks(cp, lay, scaled, {});
    const double d_in = static_cast<double>(choi.dim_in());
    cp.set_cost(lay.t0, 0.5 * d_in);
    cp.set_cost(lay.t1, 0.5 * d_in);
    SolverSolution sol = cp.solve(opts);
    if (!sol.ok())
        throw std::runtime_error("diamond_norm: solver failed with status " +
                                 to_string(sol.status));
    return scale * sol.objective;
}

double diamond_norm_primal(const ChoiMatrix& choi, const SolverOptions& opts) {
    check_hp_choi(choi, "diamond_norm_primal");
    const int d_choi = choi.side();
    const int d_in = choi.dim_in();
    HermitianIndexer hi_in(d_in);

    // variables: X (full complex d_choi x d_choi: re then im, row-major),
    // rho0, rho1 (Hermitian components)
    const int x_re = 0;
    const int x_im = d_choi * d_choi;
    const int rho0 = 2 * d_choi * d_choi;
    const int rho1 = rho0 + hi_in.size();
    const int total = rho1 + hi_in.size();
    ConicProgram cp(total);

    const int big = cp.add_dense_block(2 * 2 * d_choi);
    for (int r = 0; r < d_choi; ++r)
        for (int c = 0; c < d_choi; ++c) {
            ComplexMatrix f = ComplexMatrix::Zero(2 * d_choi, 2 * d_choi);
            f(r, d_choi + c) = 1.0;
            f(d_choi + c, r) = 1.0;
            cp.add_term_hermitian(big, x_re + r * d_choi + c, f);
            f(r, d_choi + c) = Complex(0, 1);
            f(d_choi + c, r) = Complex(0, -1);
            cp.add_term_hermitian(big, x_im + r * d_choi + c, f);
        }
    const int d_out = choi.dim_out();
    for (int p = 0; p < hi_in.size(); ++p) {
        const ComplexMatrix ident_kron = kron(ComplexMatrix::Identity(d_out, d_out),
                                              hi_in.elementary(p));
        ComplexMatrix f = ComplexMatrix::Zero(2 * d_choi, 2 * d_choi);
        f.topLeftCorner(d_choi, d_choi) = ident_kron;
        cp.add_term_hermitian(big, rho0 + p, f);
        f.setZero();
        f.bottomRightCorner(d_choi, d_choi) = ident_kron;
        cp.add_term_hermitian(big, rho1 + p, f);
    }
    // tr rho_k = 1
    std::vector<std::pair<int, double>> tr0, tr1;
    for (int i = 0; i < d_in; ++i) {
        tr0.emplace_back(rho0 + hi_in.diag(i), 1.0);
        tr1.emplace_back(rho1 + hi_in.diag(i), 1.0);
    }
    cp.add_equality(tr0, 1.0);
    cp.add_equality(tr1, 1.0);

    // maximize Re<J, X> with J = d_in * Choi
    for (int r = 0; r < d_choi; ++r)
        for (int c = 0; c < d_choi; ++c) {
            const Complex j = static_cast<double>(d_in) * choi.matrix(r, c);
            if (j.real() != 0.0) cp.set_cost(x_re + r * d_choi + c, -j.real());
            if (j.imag() != 0.0) cp.set_cost(x_im + r * d_choi + c, -j.imag());
        }
    SolverSolution sol = cp.solve(opts);
    if (!sol.ok())
        throw std::runtime_error("diamond_norm_primal: solver failed with status " +
                                 to_string(sol.status));
    return -sol.objective;
}

std::optional<QuasiprobabilityDecomposition> try_exact_qpd(const ChoiMatrix& target,
                                                           const ChannelSet& set,
                                                           const SolverOptions& opts) {
    check_hp_choi(target, "exact_qpd");
    check_set(target, set, "exact_qpd");
    const int n = static_cast<int>(set.size());
    HermitianIndexer hi(target.side());

    RealMatrix basis(hi.size(), n);
    for (int i = 0; i < n; ++i) basis.col(i) = hi.components(set[i].second.matrix);
    const Eigen::VectorXd tau = hi.components(target.matrix);

    Eigen::VectorXd ls = basis.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(tau);
    const double ls_residual = (basis * ls - tau).cwiseAbs().maxCoeff();
    if (ls_residual > 1e-8 * (1.0 + tau.cwiseAbs().maxCoeff())) return std::nullopt;

    // split a = a+ - a-, minimize sum(a+ + a-)
    LinearProgram lp;
    lp.cost = Eigen::VectorXd::Ones(2 * n);
    lp.a_eq.resize(hi.size(), 2 * n);
    lp.a_eq.leftCols(n) = basis;
    lp.a_eq.rightCols(n) = -basis;
    lp.b_eq = tau;
    lp.lower = Eigen::VectorXd::Zero(2 * n);
    SolverSolution sol = solve_lp(lp, opts);
    if (!sol.ok())
        throw std::runtime_error("exact_qpd: LP solver failed with status " +
                                 to_string(sol.status));

    QuasiprobabilityDecomposition q;
    q.target = target;
    double gamma = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = sol.x(i) - sol.x(n + i);
        q.items.push_back({set[i].first, a, set[i].second});
        gamma += std::abs(a);
    }
    q.gamma = gamma;

    ChoiMatrix res = q.recombined();
    res.matrix -= target.matrix;
    const double bound = diamond_upper_bound(res);
    q.residual_diamond_error =
        bound <= 0.5 * Tolerances::defaults().exact_residual ? bound : diamond_norm(res, opts);
    return q;
}

QuasiprobabilityDecomposition exact_qpd(const ChoiMatrix& target, const ChannelSet& set,
                                        const SolverOptions& opts) {
    auto q = try_exact_qpd(target, set, opts);
    if (!q)
        throw std::runtime_error(
            "exact_qpd: target lies outside the span of the decomposition set; "
            "use approximate_qpd");
    return *q;
}

QuasiprobabilityDecomposition approximate_qpd(const ChoiMatrix& target, const ChannelSet& set,
                                              const ApproxQpdOptions& options,
                                              const SolverOptions& opts) {
    check_hp_choi(target, "approximate_qpd");
    check_set(target, set, "approximate_qpd");
    require(options.gamma_budget >= 0.0, "approximate_qpd: budget must be nonnegative");

    if (options.gamma_budget <= 1e-12) {
        QuasiprobabilityDecomposition q;
        q.target = target;
        for (const auto& [label, choi] : set) q.items.push_back({label, 0.0, choi});
        q.gamma = 0.0;
        q.residual_diamond_error = diamond_norm(target, opts);
        return q;
    }

    const QpdProgramLayout lay = make_layout(target.side(), static_cast<int>(set.size()));
    ConicProgram cp(lay.total);
    build_qpd_blocks(cp, lay, target, set);
    add_physicality_constraints(cp, lay, target, set, options);

    std::vector<std::pair<int, double>> budget_row;
    for (int i = 0; i < lay.n; ++i) budget_row.emplace_back(lay.u + i, -1.0);
    cp.add_inequality(budget_row, options.gamma_budget);

    const double d_in = static_cast<double>(target.dim_in());
    cp.set_cost(lay.t0, 0.5 * d_in);
    cp.set_cost(lay.t1, 0.5 * d_in);

    SolverSolution sol = cp.solve(opts);
    if (!sol.ok())
        throw std::runtime_error("approximate_qpd: solver failed with status " +
                                 to_string(sol.status));
    return qpd_from_solution(target, set, lay, sol.x, sol.objective);
}

QuasiprobabilityDecomposition min_gamma_qpd(const ChoiMatrix& target, const ChannelSet& set,
                                            double error_bound, const SolverOptions& opts) {
    check_hp_choi(target, "min_gamma_qpd");
    check_set(target, set, "min_gamma_qpd");
    require(error_bound > 0.0, "min_gamma_qpd: error bound must be positive");

    const QpdProgramLayout lay = make_layout(target.side(), static_cast<int>(set.size()));
    ConicProgram cp(lay.total);
    build_qpd_blocks(cp, lay, target, set);

    const double d_in = static_cast<double>(target.dim_in());
    cp.add_inequality({{lay.t0, -0.5 * d_in}, {lay.t1, -0.5 * d_in}}, error_bound);
    for (int i = 0; i < lay.n; ++i) cp.set_cost(lay.u + i, 1.0);

    SolverSolution sol = cp.solve(opts);
    if (!sol.ok())
        throw std::runtime_error("min_gamma_qpd: solver failed with status " +
                                 to_string(sol.status));
    const double residual =
        0.5 * d_in * (sol.x(lay.t0) + sol.x(lay.t1));
    return qpd_from_solution(target, set, lay, sol.x, residual);
}

std::vector<double> default_budget_grid(double gamma_opt, int n_points) {
    require(n_points >= 2, "budget grid needs at least two points");
    std::vector<double> grid;
    grid.reserve(n_points);
    if (gamma_opt <= 1.0 + 1e-9) {
        const double hi = std::log(1.05);
        for (int k = 0; k < n_points; ++k)
            grid.push_back(std::exp(hi * k / (n_points - 1)));
        return grid;
    }
    const double hi = std::log(gamma_opt);
    for (int k = 0; k < n_points - 1; ++k)
        grid.push_back(std::exp(hi * k / (n_points - 2)));
    grid.push_back(1.05 * gamma_opt);
    return grid;
}

TradeoffCurve tradeoff_curve(const ChoiMatrix& target, const ChannelSet& set,
                             const std::vector<double>& budgets,
                             const ApproxQpdOptions& base_options, const Parallelism& par,
                             const SolverOptions& opts) {
    require(!budgets.empty(), "tradeoff_curve: empty budget grid");
    for (size_t i = 1; i < budgets.size(); ++i)
        require(budgets[i] >= budgets[i - 1] && budgets[i - 1] >= 0.0,
                "tradeoff_curve: budgets must be sorted and nonnegative");

    std::vector<double> errors(budgets.size(), 0.0);
    std::vector<std::string> failures(budgets.size());
    parallel_for(par, static_cast<std::int64_t>(budgets.size()), [&](std::int64_t i) {
        try {
            ApproxQpdOptions o = base_options;
            o.gamma_budget = budgets[i];
            errors[i] = approximate_qpd(target, set, o, opts).residual_diamond_error;
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });
    for (size_t i = 0; i < budgets.size(); ++i)
        if (!failures[i].empty())
            throw std::runtime_error("tradeoff_curve: solve at budget " +
                                     std::to_string(budgets[i]) + " failed: " + failures[i]);

    TradeoffCurve curve;
    for (size_t i = 0; i < budgets.size(); ++i) curve.samples.emplace_back(budgets[i], errors[i]);
    for (size_t i = 1; i < curve.samples.size(); ++i)
        if (curve.samples[i].second > curve.samples[i - 1].second + 1e-6)
            throw std::runtime_error("tradeoff_curve: non-monotone samples at budget " +
                                     std::to_string(curve.samples[i].first));
    return curve;
}

}  // namespace qpd
