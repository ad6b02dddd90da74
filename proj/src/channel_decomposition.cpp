#include "qpd/channel_decomposition.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace qpd {

namespace {

constexpr double kSuccessThreshold = 1e-10;  // on the unit-scale objective

ComplexMatrix trace_out_first(const ComplexMatrix& m, Eigen::Index d1, Eigen::Index d2) {
    ComplexMatrix out = ComplexMatrix::Zero(d2, d2);
    for (Eigen::Index i = 0; i < d2; ++i)
        for (Eigen::Index j = 0; j < d2; ++j)
            for (Eigen::Index o = 0; o < d1; ++o) out(i, j) += m(o * d2 + i, o * d2 + j);
    return out;
}

// adjoint of trace_out_first: kron(I_d1, m)
ComplexMatrix lift_marginal(const ComplexMatrix& m, Eigen::Index d1) {
    return kron(ComplexMatrix::Identity(d1, d1), m);
}

void check_target(const ChoiMatrix& target, const char* who) {
    if (!is_hermitian(target.matrix, 1e-8))
        throw std::invalid_argument(std::string(who) + ": target Choi must be Hermitian");
    if (target.n_in != target.n_out)
        throw std::invalid_argument(std::string(who) + ": target must be a square map");
    // marginal proportional to the identity, as for (combinations of)
    // trace-preserving maps
    const Eigen::Index d = target.dim_in();
    ComplexMatrix marg = trace_out_first(target.matrix, target.dim_out(), d);
    const Complex tr = target.matrix.trace();
    const double dev = (marg - (tr / static_cast<double>(d)) * ComplexMatrix::Identity(d, d))
                           .cwiseAbs()
                           .maxCoeff();
    const double scale = std::max(1.0, target.matrix.cwiseAbs().maxCoeff());
    if (dev > 1e-6 * scale)
        throw std::invalid_argument(std::string(who) +
                                    ": target marginal is not proportional to the identity");
}

struct BmWork {
    ChoiMatrix target;        // normalized scale
    double scale = 1.0;       // original = scale * normalized
    double f_star_scaled = 0.0;
    double lo = 0.0, hi = 0.0;  // gamma band on the normalized problem
    int d = 0, d_choi = 0, rank = 0;

    double objective(const BMFactors& f, ComplexMatrix* recon_err = nullptr) const;
    void gradient(const BMFactors& f, BMFactors& g) const;
    void project(BMFactors& f) const;
    static double total_weight(const BMFactors& f);
};

double BmWork::total_weight(const BMFactors& f) {
    double s = 0.0;
    for (const auto& x : f.pos) s += x.squaredNorm();
    for (const auto& x : f.neg) s += x.squaredNorm();
    return s;
}

double BmWork::objective(const BMFactors& f, ComplexMatrix* recon_err) const {
    ComplexMatrix r = -target.matrix;
    double marg_term = 0.0;
    auto accumulate = [&](const ComplexMatrix& x, double sign) {
        ComplexMatrix lam = x.adjoint() * x;
        r += sign * lam;
        const Complex tr = lam.trace();
        ComplexMatrix m = trace_out_first(lam, d_choi / d, d);
        m -= (tr / static_cast<double>(d)) * ComplexMatrix::Identity(d, d);
        marg_term += m.squaredNorm();
    };
    for (const auto& x : f.pos) accumulate(x, 1.0);
    for (const auto& x : f.neg) accumulate(x, -1.0);
    if (recon_err) *recon_err = r;
    return r.squaredNorm() + marg_term;
}

void BmWork::gradient(const BMFactors& f, BMFactors& g) const {
    ComplexMatrix r;
    objective(f, &r);  // reconstruction residual (Hermitian)
    g.pos.resize(f.pos.size());
    g.neg.resize(f.neg.size());
    auto grad_item = [&](const ComplexMatrix& x, double sign, ComplexMatrix& out) {
        ComplexMatrix lam = x.adjoint() * x;
        const Complex tr = lam.trace();
        ComplexMatrix m = trace_out_first(lam, d_choi / d, d);
        m -= (tr / static_cast<double>(d)) * ComplexMatrix::Identity(d, d);
        // d||R||^2 -> 4 X (sign R); d||m||^2 -> 4 X lift(m) (tr m = 0)
        out = 4.0 * x * (sign * r + lift_marginal(m, d_choi / d));
    };
    for (size_t j = 0; j < f.pos.size(); ++j) grad_item(f.pos[j], 1.0, g.pos[j]);
    for (size_t j = 0; j < f.neg.size(); ++j) grad_item(f.neg[j], -1.0, g.neg[j]);
}

void BmWork::project(BMFactors& f) const {
    const double w = total_weight(f);
    if (w <= 0.0) return;
    double target_w = std::clamp(w, lo, hi);
    if (target_w == w) return;
    const double c = std::sqrt(target_w / w);
    for (auto& x : f.pos) x *= c;
    for (auto& x : f.neg) x *= c;
}

// vectorization helpers for the line-search bookkeeping
void axpy(BMFactors& y, double a, const BMFactors& x) {
    for (size_t j = 0; j < y.pos.size(); ++j) y.pos[j] += a * x.pos[j];
    for (size_t j = 0; j < y.neg.size(); ++j) y.neg[j] += a * x.neg[j];
}

double dot(const BMFactors& a, const BMFactors& b) {
    double s = 0.0;
    for (size_t j = 0; j < a.pos.size(); ++j)
        s += (a.pos[j].real().array() * b.pos[j].real().array()).sum() +
             (a.pos[j].imag().array() * b.pos[j].imag().array()).sum();
    for (size_t j = 0; j < a.neg.size(); ++j)
        s += (a.neg[j].real().array() * b.neg[j].real().array()).sum() +
             (a.neg[j].imag().array() * b.neg[j].imag().array()).sum();
    return s;
}

BMFactors subtract(const BMFactors& a, const BMFactors& b) {
    BMFactors out = a;
    axpy(out, -1.0, b);
    return out;
}

// projected Barzilai-Borwein descent with a nonmonotone acceptance rule
double bm_minimize(const BmWork& work, BMFactors& f, int max_iterations) {
    work.project(f);
    BMFactors g, g_prev, f_prev;
    work.gradient(f, g);
    double fx = work.objective(f);
    std::vector<double> recent{fx};

    double step = 1.0 / std::max(1e-12, std::sqrt(dot(g, g)));
    for (int it = 0; it < max_iterations; ++it) {
        if (fx < 1e-16) break;
        const double gnorm2 = dot(g, g);
        if (gnorm2 < 1e-24) break;

        BMFactors trial;
        double fx_trial = 0.0;
        const double f_ref = *std::max_element(recent.begin(), recent.end());
        double s = step;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            trial = f;
            axpy(trial, -s, g);
            work.project(trial);
            fx_trial = work.objective(trial);
            BMFactors d = subtract(trial, f);
            const double decrease = 1e-4 * std::abs(dot(d, g));
            if (fx_trial <= f_ref - decrease) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) break;

        f_prev = f;
        g_prev = g;
        f = trial;
        fx = fx_trial;
        recent.push_back(fx);
        if (recent.size() > 6) recent.erase(recent.begin());

        work.gradient(f, g);
        BMFactors ds = subtract(f, f_prev);
        BMFactors dy = subtract(g, g_prev);
        const double sy = dot(ds, dy);
        const double ss = dot(ds, ds);
        step = sy > 1e-18 ? ss / sy : 2.0 * s;
        step = std::clamp(step, 1e-14, 1e8);
    }
    return fx;
}

// Gauss-Newton polish of the quadratic-residual least squares; the residual
// vector is linear in Lambda = X^dag X, so J is available in closed form.
double bm_polish(const BmWork& work, BMFactors& f, int max_iterations) {
    const int d_choi = work.d_choi;
    const int d = work.d;
    HermitianIndexer hi(d_choi);
    HermitianIndexer hi_m(d);
    const int n_items = static_cast<int>(f.pos.size() + f.neg.size());
    const int n_res = hi.size() + n_items * hi_m.size();
    const int vars_per_item = 2 * work.rank * d_choi;
    const int n_vars = n_items * vars_per_item;

    Eigen::VectorXd res(n_res);
    RealMatrix jac(n_res, n_vars);

    auto item_at = [&](BMFactors& ff, int j) -> ComplexMatrix& {
        return j < static_cast<int>(ff.pos.size()) ? ff.pos[j]
                                                   : ff.neg[j - static_cast<int>(ff.pos.size())];
    };
    auto sign_at = [&](int j) { return j < static_cast<int>(f.pos.size()) ? 1.0 : -1.0; };

    double fx = work.objective(f);
    for (int it = 0; it < max_iterations; ++it) {
        if (fx < 1e-26) break;
        // residuals
        ComplexMatrix r;
        work.objective(f, &r);
        res.head(hi.size()) = hi.components(r);
        for (int j = 0; j < n_items; ++j) {
            ComplexMatrix lam = item_at(f, j).adjoint() * item_at(f, j);
            ComplexMatrix m = trace_out_first(lam, d_choi / d, d);
            m -= (lam.trace() / static_cast<double>(d)) * ComplexMatrix::Identity(d, d);
            res.segment(hi.size() + j * hi_m.size(), hi_m.size()) = hi_m.components(m);
        }
        // Jacobian: perturbing one real/imag entry of X_j changes Lambda_j by
        // E^dag X + X^dag E with E a single-entry matrix
        jac.setZero();
        for (int j = 0; j < n_items; ++j) {
            const ComplexMatrix& x = item_at(f, j);
            const double sign = sign_at(j);
            for (int rho = 0; rho < work.rank; ++rho)
                for (int c = 0; c < d_choi; ++c)
                    for (int part = 0; part < 2; ++part) {
                        const Complex e = part == 0 ? Complex(1, 0) : Complex(0, 1);
                        // dLam = e* conj at (c, :) row ... build directly
                        ComplexMatrix dlam = ComplexMatrix::Zero(d_choi, d_choi);
                        dlam.row(c) += std::conj(e) * x.row(rho);
                        dlam.col(c) += e * x.row(rho).adjoint();
                        const int col = j * vars_per_item + (rho * d_choi + c) * 2 + part;
                        jac.col(col).head(hi.size()) = sign * hi.components(dlam);
                        ComplexMatrix dm = trace_out_first(dlam, d_choi / d, d);
                        dm -= (dlam.trace() / static_cast<double>(d)) *
                              ComplexMatrix::Identity(d, d);
                        jac.col(col).segment(hi.size() + j * hi_m.size(), hi_m.size()) =
                            hi_m.components(dm);
                    }
        }
        RealMatrix jtj = jac.transpose() * jac;
        Eigen::VectorXd jtr = jac.transpose() * res;
        double lambda = 1e-12 * (1.0 + jtj.diagonal().maxCoeff());
        bool stepped = false;
        for (int tries = 0; tries < 8 && !stepped; ++tries) {
            RealMatrix damped = jtj + lambda * RealMatrix::Identity(n_vars, n_vars);
            Eigen::VectorXd delta = damped.ldlt().solve(jtr);
            BMFactors trial = f;
            for (int j = 0; j < n_items; ++j) {
                ComplexMatrix& x = item_at(trial, j);
                for (int rho = 0; rho < work.rank; ++rho)
                    for (int c = 0; c < d_choi; ++c) {
                        const int col = j * vars_per_item + (rho * d_choi + c) * 2;
                        x(rho, c) -= Complex(delta(col), delta(col + 1));
                    }
            }
            work.project(trial);
            const double fx_trial = work.objective(trial);
            if (fx_trial < fx) {
                f = trial;
                fx = fx_trial;
                stepped = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) break;
    }
    return fx;
}

}  // namespace

ChoiMatrix ChannelDecomposition::recombined(const ChoiMatrix& like) const {
    ChoiMatrix out = like;
    out.matrix.setZero();
    for (const auto& it : items)
        out.matrix += (it.positive ? it.weight : -it.weight) * it.choi.matrix;
    return out;
}

void BMConfig::validate() const {
    if (rank < 2) throw std::invalid_argument("BMConfig: rank must be at least 2");
    if (epsilon < 0.0) throw std::invalid_argument("BMConfig: epsilon must be nonnegative");
    if (restarts < 1) throw std::invalid_argument("BMConfig: needs at least one restart");
}

ChannelDecomposition two_channel_decomposition(const ChoiMatrix& target,
                                               const SolverOptions& opts) {
    check_target(target, "two_channel_decomposition");
    const int d_choi = target.side();
    const int d = target.dim_in();
    const double scale = std::max(target.matrix.cwiseAbs().maxCoeff(), 1e-12);

    SemidefiniteProgram p;
    p.psd_sides = {d_choi, d_choi};
    p.n_nonneg = 2;
    const int n = p.n_scalars();
    p.cost = Eigen::VectorXd::Zero(n);
    p.cost(p.nonneg_index(0)) = 1.0;
    p.cost(p.nonneg_index(1)) = 1.0;

    HermitianIndexer hi(d_choi);
    HermitianIndexer hi_m(d);
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;

    // L+ - L- = target (componentwise over the Hermitian parameters)
    const Eigen::VectorXd tau = hi.components(target.matrix / scale);
    for (int q = 0; q < hi.size(); ++q) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        row(q) = 1.0;               // block 0 entries come first
        row(hi.size() + q) = -1.0;  // then block 1
        rows.push_back(row);
        rhs.push_back(tau(q));
    }
    // tr_out[L+-] = a+- (1/d) I
    const int d_out = d_choi / d;
    for (int blk = 0; blk < 2; ++blk)
        for (int q = 0; q < hi_m.size(); ++q) {
            const ComplexMatrix lifted = lift_marginal(hi_m.elementary(q), d_out);
            Eigen::VectorXd lift_comps = hi.components(lifted);
            Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
            // <E_q, tr_out[L]> = <lift(E_q), L>; diagonal components carry
            // weight 1, off-diagonal pairs weight 2 under the scalarization
            for (int t = 0; t < hi.size(); ++t) {
                const double w = t < d_choi ? 1.0 : 2.0;
                if (lift_comps(t) != 0.0) row(blk * hi.size() + t) = w * lift_comps(t);
            }
            const double ident_q = q < d ? 1.0 / d : 0.0;  // components of (1/d) I
            row(p.nonneg_index(blk)) = -ident_q * (q < d ? 1.0 : 2.0);
            rows.push_back(row);
            rhs.push_back(0.0);
        }

    p.a_eq.resize(static_cast<Eigen::Index>(rows.size()), n);
    p.b_eq.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        p.a_eq.row(static_cast<Eigen::Index>(r)) = rows[r];
        p.b_eq(static_cast<Eigen::Index>(r)) = rhs[r];
    }

    SolverSolution sol = solve_sdp(p, opts);
    if (!sol.ok())
        throw std::runtime_error("two_channel_decomposition: solver failed with status " +
                                 to_string(sol.status));

    ChannelDecomposition out;
    ComplexMatrix recon = ComplexMatrix::Zero(d_choi, d_choi);
    for (int blk = 0; blk < 2; ++blk) {
        ChannelDecompositionItem item;
        item.positive = blk == 0;
        item.weight = scale * sol.x(p.nonneg_index(blk));
        ComplexMatrix lam = scale * p.block_value(blk, sol.x);
        recon += (item.positive ? 1.0 : -1.0) * lam;
        if (item.weight > 1e-9) {
            item.choi = ChoiMatrix(target.n_in, target.n_out, lam / item.weight);
        } else {
            item.weight = std::max(item.weight, 0.0);
            item.choi = ChoiMatrix(target.n_in, target.n_out,
                                   ComplexMatrix::Zero(d_choi, d_choi));
        }
        out.gamma += item.weight;
        out.items.push_back(std::move(item));
    }
    out.residual_fro = (recon - target.matrix).norm();
    return out;
}

BMFactors bm_initialize(const ChoiMatrix& target, const ChannelDecomposition& two_channel,
                        const BMConfig& cfg) {
    cfg.validate();
    const int d_choi = target.side();
    const int n_pos = cfg.resolved_n_pos(target.n_in);
    const int n_neg = cfg.resolved_n_neg(target.n_in);

    auto split = [&](const ChannelDecompositionItem& item, int n_items) {
        std::vector<ComplexMatrix> factors(n_items,
                                           ComplexMatrix::Zero(cfg.rank, d_choi));
        if (item.weight <= 0.0) return factors;
        ComplexMatrix lam = item.weight * item.choi.matrix;
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(lam);
        // eigenvalues ascending; walk from the top, rank entries per item
        int pair_index = 0, row = 0;
        for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0 && pair_index < n_items; --k) {
            const double lambda = std::max(es.eigenvalues()(k), 0.0);
            factors[pair_index].row(row) =
                std::sqrt(lambda) * es.eigenvectors().col(k).adjoint();
            if (++row == cfg.rank) {
                row = 0;
                ++pair_index;
            }
        }
        return factors;
    };

    BMFactors f;
    f.pos = split(two_channel.items.at(0), n_pos);
    f.neg = split(two_channel.items.at(1), n_neg);
    return f;
}

double bm_objective(const ChoiMatrix& target, const BMFactors& f) {
    BmWork work;
    work.target = target;
    work.d = target.dim_in();
    work.d_choi = target.side();
    work.rank = f.pos.empty() ? (f.neg.empty() ? 2 : static_cast<int>(f.neg[0].rows()))
                              : static_cast<int>(f.pos[0].rows());
    return work.objective(f);
}

void bm_gradient(const ChoiMatrix& target, const BMFactors& f, BMFactors& grad) {
    BmWork work;
    work.target = target;
    work.d = target.dim_in();
    work.d_choi = target.side();
    work.rank = f.pos.empty() ? (f.neg.empty() ? 2 : static_cast<int>(f.neg[0].rows()))
                              : static_cast<int>(f.pos[0].rows());
    work.gradient(f, grad);
}

RankConstrainedResult rank_constrained_decomposition(const ChoiMatrix& target, const BMConfig& cfg,
                                                     const ChannelDecomposition& two_channel) {
    cfg.validate();
    check_target(target, "rank_constrained_decomposition");
    const double f_star = two_channel.gamma;
    const double scale = std::max(target.matrix.cwiseAbs().maxCoeff(), 1e-12);

    BmWork work;
    work.target = target;
    work.target.matrix /= scale;
    work.scale = scale;
    work.d = target.dim_in();
    work.d_choi = target.side();
    work.rank = cfg.rank;
    work.f_star_scaled = f_star / scale;
    work.lo = work.f_star_scaled;
    work.hi = (1.0 + cfg.epsilon) * work.f_star_scaled;

    BMFactors init = bm_initialize(target, two_channel, cfg);
    const double root_scale = std::sqrt(scale);
    for (auto* side : {&init.pos, &init.neg})
        for (auto& x : *side) x /= root_scale;
    const double init_norm = std::sqrt(BmWork::total_weight(init));

    struct RestartOutcome {
        double objective = std::numeric_limits<double>::infinity();
        BMFactors factors;
        int iterations = 0;
    };
    std::vector<RestartOutcome> outcomes(cfg.restarts);

    parallel_for(cfg.par, cfg.restarts, [&](std::int64_t r) {
        BMFactors f = init;
        if (r > 0) {
            std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(r));
            std::normal_distribution<double> g;
            const double sigma =
                0.05 * init_norm /
                std::sqrt(static_cast<double>(2 * work.rank * work.d_choi *
                                              (init.pos.size() + init.neg.size())));
            for (auto* side : {&f.pos, &f.neg})
                for (auto& x : *side)
                    for (Eigen::Index i = 0; i < x.rows(); ++i)
                        for (Eigen::Index j = 0; j < x.cols(); ++j)
                            x(i, j) += Complex(sigma * g(rng), sigma * g(rng));
        }
        bm_minimize(work, f, cfg.max_iterations);
        outcomes[r].objective = bm_polish(work, f, 25);
        outcomes[r].factors = std::move(f);
    });

    // all restarts below the success threshold are equivalent; prefer the
    // lowest index (the unperturbed spectral start) for reproducibility
    int best = 0;
    for (int r = 1; r < cfg.restarts; ++r) {
        if (outcomes[best].objective <= kSuccessThreshold) break;
        if (outcomes[r].objective < outcomes[best].objective) best = r;
    }

    const BMFactors& f = outcomes[best].factors;
    RankConstrainedResult result;
    result.objective = outcomes[best].objective;
    result.success = result.objective <= kSuccessThreshold;
    result.best_restart = best;

    ComplexMatrix recon = ComplexMatrix::Zero(target.side(), target.side());
    auto add_items = [&](const std::vector<ComplexMatrix>& side, bool positive) {
        for (const auto& x : side) {
            ChannelDecompositionItem item;
            item.positive = positive;
            ComplexMatrix lam = scale * (x.adjoint() * x);
            item.weight = lam.trace().real();
            recon += (positive ? 1.0 : -1.0) * lam;
            item.choi = ChoiMatrix(target.n_in, target.n_out,
                                   item.weight > 1e-12 ? ComplexMatrix(lam / item.weight)
                                                       : ComplexMatrix::Zero(target.side(),
                                                                             target.side()));
            result.decomposition.gamma += item.weight;
            result.decomposition.items.push_back(std::move(item));
        }
    };
    add_items(f.pos, true);
    add_items(f.neg, false);
    result.decomposition.residual_fro = (recon - target.matrix).norm();
    return result;
}

RankConstrainedResult rank_constrained_decomposition(const ChoiMatrix& target, const BMConfig& cfg,
                                                     double f_star, const SolverOptions& opts) {
    ChannelDecomposition two = two_channel_decomposition(target, opts);
    if (f_star > 0.0 && std::abs(f_star - two.gamma) > 1e-6 * (1.0 + f_star))
        throw std::invalid_argument(
            "rank_constrained_decomposition: f_star does not match the two-channel gamma");
    return rank_constrained_decomposition(target, cfg, two);
}

}  // namespace qpd
