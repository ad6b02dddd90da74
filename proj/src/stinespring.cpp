#include "qpd/stinespring.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace qpd {

namespace {

// exact repair of near-TP channels: K_k -> K_k M^{-1/2} with M = sum K^dag K
ChoiMatrix project_to_tp(const ChoiMatrix& choi, double rank_cutoff) {
    std::vector<ComplexMatrix> kraus = kraus_from_choi(choi, rank_cutoff);
    const Eigen::Index d = kraus.front().cols();
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    for (const auto& k : kraus) m += k.adjoint() * k;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    if (es.eigenvalues().minCoeff() <= 1e-6)
        throw std::runtime_error("tp projection: singular normalization");
    ComplexMatrix inv_sqrt = es.eigenvectors() *
                             es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                             es.eigenvectors().adjoint();
    for (auto& k : kraus) k = k * inv_sqrt;
    return choi_from_kraus(kraus);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    return z;
}

// inner coefficient solve per the budget policy: the exact LP when the
// target lies in the span, otherwise budgets swept upward until the residual
// improvement stalls below 1% (or drops well under the threshold)
QuasiprobabilityDecomposition inner_qpd(const ChoiMatrix& target, const ChannelSet& set,
                                        const StinespringConfig& cfg) {
    if (auto exact = try_exact_qpd(target, set, cfg.solver)) return *exact;

    double budget = 1.0;
    QuasiprobabilityDecomposition best =
        approximate_qpd(target, set, {.gamma_budget = budget}, cfg.solver);
    for (int step = 0; step < 30 && best.residual_diamond_error > 0.1 * cfg.delta_threshold;
         ++step) {
        budget += 0.25 * (budget + 1.0);
        QuasiprobabilityDecomposition next =
            approximate_qpd(target, set, {.gamma_budget = budget}, cfg.solver);
        const bool stalled =
            next.residual_diamond_error > 0.99 * best.residual_diamond_error;
        if (next.residual_diamond_error < best.residual_diamond_error) best = std::move(next);
        if (stalled) break;
    }
    return best;
}

}  // namespace

ChoiMatrix ideal_circuit_choi(const Circuit& c) {
    if (c.has_postselection())
        throw std::invalid_argument("target circuit must be unitary (no postselection)");
    if (c.n_data != c.n_qubits)
        throw std::invalid_argument("target circuit must not use ancillas");
    const Eigen::Index d = Eigen::Index{1} << c.n_qubits;
    ComplexMatrix u = ComplexMatrix::Identity(d, d);
    for (const auto& g : c.gates) u = expanded_gate(g, c.n_qubits) * u;
    return choi_from_unitary(u);
}

ChoiMatrix residual_delta(const ChoiMatrix& target, const QuasiprobabilityDecomposition& qpd) {
    ChoiMatrix delta = target;
    delta.matrix -= qpd.recombined().matrix;
    return delta;
}

StinespringResult run_stinespring(const Circuit& target, const NoiseOracle& oracle,
                                  const StinespringConfig& cfg) {
    if (cfg.delta_threshold <= 0.0)
        throw std::invalid_argument("run_stinespring: threshold must be positive");
    if (target.n_qubits > 2)
        throw std::invalid_argument("run_stinespring: targets are 1- or 2-qubit gates");

    const ChoiMatrix ideal = ideal_circuit_choi(target);
    const int n_data = target.n_qubits;

    StinespringResult result;
    result.set.push_back({"noisy_target", 0, target, oracle(target)});

    for (int iteration = 1; iteration <= cfg.max_iterations; ++iteration) {
        ChannelSet set;
        for (const auto& e : result.set) set.emplace_back(e.label, e.realized);

        QuasiprobabilityDecomposition qpd = inner_qpd(ideal, set, cfg);

        IterationRecord rec;
        rec.iteration = iteration;
        rec.delta = qpd.residual_diamond_error;
        rec.gamma = qpd.gamma;

        ChoiMatrix delta = residual_delta(ideal, qpd);
        rec.residual = delta;
        rec.residual_trace = delta.matrix.trace().real();
        {
            const Eigen::Index d = delta.dim_in();
            ComplexMatrix marg = tp_marginal(delta);
            rec.residual_marginal_dev =
                (marg - (delta.matrix.trace() / static_cast<double>(d)) *
                            ComplexMatrix::Identity(d, d))
                    .norm();
        }

        if (rec.delta < cfg.delta_threshold) {
            result.trace.push_back(rec);
            result.converged = true;
            break;
        }

        // rank-constrained decomposition of the residual map, one doubled
        // retry on non-convergence
        ChannelDecomposition two = two_channel_decomposition(delta, cfg.solver);
        BMConfig bm = cfg.bm;
        bm.rank = cfg.rank;
        bm.seed = mix_seed(cfg.bm.seed, static_cast<std::uint64_t>(iteration), 0);
        bm.par = cfg.par;
        RankConstrainedResult rc = rank_constrained_decomposition(delta, bm, two);
        if (!rc.success) {
            bm.restarts *= 2;
            bm.seed = mix_seed(cfg.bm.seed, static_cast<std::uint64_t>(iteration), 1);
            rc = rank_constrained_decomposition(delta, bm, two);
            if (!rc.success)
                throw std::runtime_error(
                    "run_stinespring: rank-constrained decomposition failed to converge "
                    "(objective " +
                    std::to_string(rc.objective) + ") at iteration " +
                    std::to_string(iteration));
        }
        rec.bm_objective = rc.objective;

        // dilate, fit, and realize every produced channel
        const int n_items = static_cast<int>(rc.decomposition.items.size());
        std::vector<DecompositionSetEntry> added(n_items);
        std::vector<std::string> failures(n_items);
        parallel_for(cfg.par, n_items, [&](std::int64_t j) {
            const auto& item = rc.decomposition.items[j];
            DecompositionSetEntry entry;
            entry.label = "it" + std::to_string(iteration) + (item.positive ? "_p" : "_n") +
                          std::to_string(j);
            entry.source_iteration = iteration;
            try {
                if (item.weight <= 1e-12) {
                    // degenerate zero-weight block: keep the set size fixed
                    // with the identity circuit
                    entry.circuit = Circuit(n_data, {});
                } else {
                    ChoiMatrix channel = project_to_tp(item.choi, 1e-9);
                    DilationResult dil = stinespring_isometry(channel, cfg.rank);
                    VariationalForm form{n_data + dil.n_ancillas, cfg.variational_depth};
                    FitOptions fit = cfg.fit;
                    fit.par = Parallelism::serial();
                    fit.seed = mix_seed(cfg.fit.seed, static_cast<std::uint64_t>(iteration),
                                        static_cast<std::uint64_t>(j));
                    FitResult fr = variational_fit(dil.isometry, form, fit);
                    entry.circuit = form.circuit(fr.theta, n_data);
                }
                entry.realized = oracle(entry.circuit);
            } catch (const std::exception& e) {
                failures[j] = e.what();
            }
            added[j] = std::move(entry);
        });
        for (int j = 0; j < n_items; ++j)
            if (!failures[j].empty())
                throw std::runtime_error("run_stinespring: channel realization failed: " +
                                         failures[j]);
        for (auto& entry : added) result.set.push_back(std::move(entry));
        rec.channels_added = n_items;
        result.trace.push_back(rec);
    }

    // optimal decomposition over the produced set; when the loop did not
    // converge, the error bound relaxes to the best achieved residual
    ChannelSet set;
    for (const auto& e : result.set) set.emplace_back(e.label, e.realized);
    if (auto exact = try_exact_qpd(ideal, set, cfg.solver)) {
        result.final_qpd = *exact;
    } else {
        double bound = cfg.delta_threshold;
        if (!result.converged && !result.trace.empty()) {
            double best_delta = result.trace.front().delta;
            for (const auto& rec : result.trace) best_delta = std::min(best_delta, rec.delta);
            bound = std::max(bound, 1.02 * best_delta);
        }
        result.final_qpd = min_gamma_qpd(ideal, set, bound, cfg.solver);
    }
    return result;
}

}  // namespace qpd
