#include "qpd/variational.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <stdexcept>

#include "qpd/qpd_core.hpp"

namespace qpd {

namespace {

constexpr Complex kI{0.0, 1.0};

struct AnsatzGate {
    GateKind kind;
    int qubit = 0;        // rotation target, or CNOT control
    int theta_index = -1; // -1 for CNOT (qubit -> qubit + 1)
};

std::vector<AnsatzGate> ansatz_gates(int n_qubits, int depth) {
    std::vector<AnsatzGate> gates;
    int idx = 0;
    auto rotation_layer = [&] {
        for (int q = 0; q < n_qubits; ++q) gates.push_back({GateKind::Ry, q, idx++});
        for (int q = 0; q < n_qubits; ++q) gates.push_back({GateKind::Rz, q, idx++});
    };
    rotation_layer();
    for (int l = 0; l < depth; ++l) {
        for (int q = 0; q + 1 < n_qubits; ++q) gates.push_back({GateKind::CNOT, q, -1});
        rotation_layer();
    }
    return gates;
}

ComplexMatrix expanded_ansatz_gate(const AnsatzGate& g, int n_qubits, const Eigen::VectorXd& theta) {
    if (g.kind == GateKind::CNOT)
        return expanded_gate(GateSpec(GateKind::CNOT, {g.qubit, g.qubit + 1}), n_qubits);
    return expanded_gate(GateSpec(g.kind, {g.qubit}, theta(g.theta_index)), n_qubits);
}

// generator factor of d/dtheta exp(-i theta P / 2) = (-i P / 2) * gate
ComplexMatrix expanded_half_pauli(const AnsatzGate& g, int n_qubits) {
    const GateKind pauli = g.kind == GateKind::Ry ? GateKind::Y : GateKind::Z;
    return -0.5 * kI * expanded_gate(GateSpec(pauli, {g.qubit}), n_qubits);
}

struct FitWork {
    const ComplexMatrix& target;  // padded to square: columns beyond d_in are 0
    std::vector<AnsatzGate> gates;
    int n_qubits = 0;
    Eigen::Index dim = 0;
    bool optimize_phase = false;

    // returns overlap f and, if grad != nullptr, its gradient; the squared
    // objective is 2 d_in - 2 f
    double overlap(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
        const size_t n_gates = gates.size();
        std::vector<ComplexMatrix> prefix(n_gates + 1);
        prefix[0] = ComplexMatrix::Identity(dim, dim);
        for (size_t k = 0; k < n_gates; ++k)
            prefix[k + 1] = expanded_ansatz_gate(gates[k], n_qubits, theta) * prefix[k];

        const Complex z = (target.adjoint() * prefix[n_gates]).trace();
        Complex phase = 1.0;
        double f;
        if (optimize_phase) {
            f = std::abs(z);
            phase = f > 1e-14 ? std::conj(z) / f : Complex(1.0, 0.0);
        } else {
            f = z.real();
        }
        if (!grad) return f;

        grad->resize(theta.size());
        grad->setZero();
        // Q_k = (G_{k+1} ... G_L)^dag target, iterated downward
        ComplexMatrix q = target;
        for (size_t k = n_gates; k-- > 0;) {
            if (gates[k].theta_index >= 0) {
                ComplexMatrix dgp = expanded_half_pauli(gates[k], n_qubits) * prefix[k + 1];
                (*grad)(gates[k].theta_index) = (phase * (q.adjoint() * dgp).trace()).real();
            }
            q = expanded_ansatz_gate(gates[k], n_qubits, theta).adjoint() * q;
        }
        return f;
    }
};

// memoryless BFGS with a strong-Wolfe line search on the squared objective
void quasi_newton_minimize(const FitWork& work, Eigen::VectorXd& theta, double d_in,
                           const FitOptions& opts) {
    const auto value_grad = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
        Eigen::VectorXd og;
        const double f = work.overlap(th, &og);
        g = -2.0 * og;
        return 2.0 * d_in - 2.0 * f;
    };

    Eigen::VectorXd g, g_new;
    double fx = value_grad(theta, g);
    Eigen::VectorXd s, y;
    bool have_pair = false;

    for (int it = 0; it < opts.max_iterations; ++it) {
        if (g.cwiseAbs().maxCoeff() <= opts.gradient_tol) break;

        Eigen::VectorXd d = -g;
        if (have_pair) {
            const double ys = y.dot(s);
            if (ys > 1e-14) {
                // single-pair two-loop recursion
                const double rho = 1.0 / ys;
                const double a1 = rho * s.dot(g);
                Eigen::VectorXd q = g - a1 * y;
                q *= ys / y.squaredNorm();
                const double b1 = rho * y.dot(q);
                d = -(q + (a1 - b1) * s);
            }
        }
        double gd = g.dot(d);
        if (gd >= 0.0) {
            d = -g;
            gd = g.dot(d);
        }

        // strong Wolfe line search
        const double c1 = 1e-4, c2 = 0.9;
        double step = 1.0, lo = 0.0, hi = 0.0;
        double fx_new = fx;
        Eigen::VectorXd theta_new;
        bool bracketed = false;
        bool ok = false;
        for (int ls = 0; ls < 30; ++ls) {
            theta_new = theta + step * d;
            fx_new = value_grad(theta_new, g_new);
            const bool armijo = fx_new <= fx + c1 * step * gd;
            if (!armijo) {
                hi = step;
                bracketed = true;
            } else if (std::abs(g_new.dot(d)) <= c2 * std::abs(gd)) {
                ok = true;
                break;
            } else if (g_new.dot(d) > 0.0) {
                hi = step;
                bracketed = true;
            } else {
                lo = step;
                if (!bracketed) {
                    step *= 2.0;
                    continue;
                }
            }
            step = bracketed ? 0.5 * (lo + hi) : step;
            if (bracketed && hi - lo < 1e-14) break;
        }
        if (!ok && fx_new >= fx) break;

        s = theta_new - theta;
        y = g_new - g;
        have_pair = true;
        theta = std::move(theta_new);
        g = g_new;
        fx = fx_new;
    }
}

}  // namespace

DilationResult stinespring_isometry(const ChoiMatrix& choi, int rank_bound,
                                    const Tolerances& tol) {
    TpcpVerdict v = is_tpcp(choi, tol);
    if (!v.cp || v.min_eigenvalue < -tol.cp_eig)
        throw std::invalid_argument("stinespring_isometry: map is not completely positive");
    if (v.tp_deviation > tol.tp_marginal)
        throw std::invalid_argument("stinespring_isometry: map is not trace-preserving");
    const int rank = channel_rank(choi, tol.rank_cutoff).value;
    if (rank > rank_bound)
        throw std::invalid_argument("stinespring_isometry: channel rank exceeds the bound");

    std::vector<ComplexMatrix> kraus = kraus_from_choi(choi, tol.rank_cutoff);
    int n_anc = 0;
    while ((1 << n_anc) < static_cast<int>(kraus.size())) ++n_anc;

    const Eigen::Index d_in = choi.dim_in();
    const Eigen::Index d_total = d_in << n_anc;
    DilationResult out;
    out.n_ancillas = n_anc;
    out.isometry = ComplexMatrix::Zero(d_total, d_in);
    for (size_t k = 0; k < kraus.size(); ++k)
        out.isometry.block(static_cast<Eigen::Index>(k) * d_in, 0, d_in, d_in) = kraus[k];

    if ((out.isometry.adjoint() * out.isometry - ComplexMatrix::Identity(d_in, d_in))
            .cwiseAbs()
            .maxCoeff() > 1e-9)
        throw std::runtime_error("stinespring_isometry: V^dag V deviates from the identity");

    // probe-state check of tr_R[V rho V^dag] against the channel itself
    for (Eigen::Index i = 0; i < d_in; ++i)
        for (Eigen::Index j = 0; j < d_in; ++j) {
            ComplexMatrix probe = ComplexMatrix::Zero(d_in, d_in);
            probe(i, j) = 1.0;
            ComplexMatrix big = out.isometry * probe * out.isometry.adjoint();
            ComplexMatrix reduced = ComplexMatrix::Zero(d_in, d_in);
            for (int a = 0; a < (1 << n_anc); ++a)
                reduced += big.block(a * d_in, a * d_in, d_in, d_in);
            if ((reduced - apply_channel(choi, probe)).cwiseAbs().maxCoeff() > 1e-8)
                throw std::runtime_error(
                    "stinespring_isometry: dilation does not reproduce the channel");
        }

    // unitary completion: orthonormal extension over deterministic candidates
    out.unitary = ComplexMatrix::Zero(d_total, d_total);
    out.unitary.leftCols(d_in) = out.isometry;
    Eigen::Index have = d_in;
    for (Eigen::Index cand = 0; cand < d_total && have < d_total; ++cand) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d_total);
        v(cand) = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            v -= out.unitary.leftCols(have) * (out.unitary.leftCols(have).adjoint() * v);
        const double norm = v.norm();
        if (norm > 1e-6) out.unitary.col(have++) = v / norm;
    }
    if (have != d_total)
        throw std::runtime_error("stinespring_isometry: unitary completion failed");
    return out;
}

Circuit VariationalForm::circuit(const Eigen::VectorXd& theta, int n_data) const {
    if (theta.size() != parameter_count())
        throw std::invalid_argument("variational form: parameter count mismatch");
    std::vector<GateSpec> gates;
    for (const auto& g : ansatz_gates(n_qubits, depth)) {
        if (g.kind == GateKind::CNOT)
            gates.emplace_back(GateKind::CNOT, std::vector<int>{g.qubit, g.qubit + 1});
        else
            gates.emplace_back(g.kind, std::vector<int>{g.qubit}, theta(g.theta_index));
    }
    return Circuit(n_qubits, std::move(gates), n_data);
}

ComplexMatrix VariationalForm::unitary(const Eigen::VectorXd& theta) const {
    if (theta.size() != parameter_count())
        throw std::invalid_argument("variational form: parameter count mismatch");
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    ComplexMatrix u = ComplexMatrix::Identity(d, d);
    for (const auto& g : ansatz_gates(n_qubits, depth))
        u = expanded_ansatz_gate(g, n_qubits, theta) * u;
    return u;
}

ComplexMatrix VariationalForm::isometry_block(const Eigen::VectorXd& theta, int n_data) const {
    return unitary(theta).leftCols(Eigen::Index{1} << n_data);
}

namespace {

ComplexMatrix padded_target(const ComplexMatrix& isometry, Eigen::Index dim) {
    ComplexMatrix t = ComplexMatrix::Zero(dim, dim);
    t.leftCols(isometry.cols()) = isometry;
    return t;
}

int checked_n_qubits(const ComplexMatrix& isometry, const VariationalForm& form) {
    const Eigen::Index dim = Eigen::Index{1} << form.n_qubits;
    if (isometry.rows() != dim || isometry.cols() > dim)
        throw std::invalid_argument("variational fit: isometry does not match the ansatz size");
    return form.n_qubits;
}

}  // namespace

double fit_objective(const ComplexMatrix& isometry, const VariationalForm& form,
                     const Eigen::VectorXd& theta, bool optimize_phase) {
    checked_n_qubits(isometry, form);
    const Eigen::Index dim = Eigen::Index{1} << form.n_qubits;
    ComplexMatrix target = padded_target(isometry, dim);
    FitWork work{target, ansatz_gates(form.n_qubits, form.depth), form.n_qubits, dim,
                 optimize_phase};
    const double f = work.overlap(theta, nullptr);
    const double d_in = static_cast<double>(isometry.cols());
    return std::sqrt(std::max(0.0, 2.0 * d_in - 2.0 * f));
}

Eigen::VectorXd fit_gradient(const ComplexMatrix& isometry, const VariationalForm& form,
                             const Eigen::VectorXd& theta, bool optimize_phase) {
    checked_n_qubits(isometry, form);
    const Eigen::Index dim = Eigen::Index{1} << form.n_qubits;
    ComplexMatrix target = padded_target(isometry, dim);
    FitWork work{target, ansatz_gates(form.n_qubits, form.depth), form.n_qubits, dim,
                 optimize_phase};
    Eigen::VectorXd grad;
    const double f = work.overlap(theta, &grad);
    const double d_in = static_cast<double>(isometry.cols());
    const double h = std::sqrt(std::max(1e-300, 2.0 * d_in - 2.0 * f));
    return -grad / h;
}

FitResult variational_fit(const ComplexMatrix& isometry, const VariationalForm& form,
                          const FitOptions& opts) {
    checked_n_qubits(isometry, form);
    const Eigen::Index dim = Eigen::Index{1} << form.n_qubits;
    ComplexMatrix target = padded_target(isometry, dim);
    FitWork work{target, ansatz_gates(form.n_qubits, form.depth), form.n_qubits, dim,
                 opts.optimize_phase};
    const double d_in = static_cast<double>(isometry.cols());

    struct Run {
        Eigen::VectorXd theta;
        double objective = 0.0;
    };
    std::vector<Run> runs(opts.restarts);
    parallel_for(opts.par, opts.restarts, [&](std::int64_t r) {
        std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(r));
        std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
        Eigen::VectorXd theta(form.parameter_count());
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = unif(rng);
        quasi_newton_minimize(work, theta, d_in, opts);
        const double f = work.overlap(theta, nullptr);
        runs[r].theta = std::move(theta);
        runs[r].objective = std::sqrt(std::max(0.0, 2.0 * d_in - 2.0 * f));
    });

    FitResult best;
    best.best_restart = 0;
    for (int r = 1; r < opts.restarts; ++r)
        if (runs[r].objective < runs[best.best_restart].objective) best.best_restart = r;
    best.theta = runs[best.best_restart].theta;
    best.objective = runs[best.best_restart].objective;
    for (const auto& run : runs) best.restart_objectives.push_back(run.objective);
    return best;
}

std::vector<DepthSweepRow> sweep_depth(const ComplexMatrix& isometry, int n_data,
                                       const std::vector<int>& depths, const NoiseOracle& oracle,
                                       const FitOptions& opts) {
    // target channel of the isometry via its Kraus blocks
    const Eigen::Index d_in = isometry.cols();
    std::vector<ComplexMatrix> kraus;
    for (Eigen::Index off = 0; off < isometry.rows(); off += d_in)
        kraus.push_back(isometry.block(off, 0, d_in, d_in));
    ChoiMatrix target = choi_from_kraus(kraus);

    int n_qubits = 0;
    while ((Eigen::Index{1} << n_qubits) < isometry.rows()) ++n_qubits;

    std::vector<DepthSweepRow> rows;
    for (int m : depths) {
        DepthSweepRow row;
        row.depth = m;
        try {
            VariationalForm form{n_qubits, m};
            FitResult fit = variational_fit(isometry, form, opts);
            row.fit_objective = fit.objective;
            ChoiMatrix realized = oracle(form.circuit(fit.theta, n_data));
            ChoiMatrix diff = target;
            diff.matrix -= realized.matrix;
            row.diamond_error = diamond_norm(diff);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace qpd
