#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpd/conic.hpp"
#include "qpd/parallel.hpp"

namespace qpd {

using ChannelSet = std::vector<std::pair<std::string, ChoiMatrix>>;

struct QpdItem {
    std::string label;
    double coeff = 0.0;
    ChoiMatrix choi;
};

struct QuasiprobabilityDecomposition {
    ChoiMatrix target;
    std::vector<QpdItem> items;
    double gamma = 0.0;                  // sum |a_i|
    double residual_diamond_error = 0.0;

    bool exact(const Tolerances& tol = Tolerances::defaults()) const {
        return residual_diamond_error <= tol.exact_residual;
    }
    // sum a_i Choi_i
    ChoiMatrix recombined() const;
};

// Diamond norm of a Hermitian-preserving map, computed from the dual SDP over
// the Choi matrix. Values follow the standard channel normalization: TPCP
// maps have norm 1, differences of TPCP maps at most 2.
double diamond_norm(const ChoiMatrix& choi, const SolverOptions& opts = {});

// Primal formulation of the same quantity; kept as an independent
// cross-check of diamond_norm.
double diamond_norm_primal(const ChoiMatrix& choi, const SolverOptions& opts = {});

// Optimal exact decomposition target = sum a_i E_i minimizing sum |a_i|.
// Returns nothing when the target is outside the span of the set.
std::optional<QuasiprobabilityDecomposition> try_exact_qpd(
    const ChoiMatrix& target, const ChannelSet& set, const SolverOptions& opts = {});

// Throwing variant of try_exact_qpd.
QuasiprobabilityDecomposition exact_qpd(const ChoiMatrix& target, const ChannelSet& set,
                                        const SolverOptions& opts = {});

struct ApproxQpdOptions {
    double gamma_budget = 1.0;
    bool enforce_cp = false;  // recombined map completely positive
    bool enforce_tp = false;  // recombined map trace-preserving
};

// Best approximate decomposition under a gamma budget: minimizes the diamond
// norm of target - sum a_i E_i subject to sum |a_i| <= gamma_budget.
QuasiprobabilityDecomposition approximate_qpd(const ChoiMatrix& target, const ChannelSet& set,
                                              const ApproxQpdOptions& options,
                                              const SolverOptions& opts = {});

// Dual use of the same program: minimize gamma subject to a diamond-norm
// error bound. Used to report the optimal gamma of a decomposition set whose
// span covers the target only approximately.
QuasiprobabilityDecomposition min_gamma_qpd(const ChoiMatrix& target, const ChannelSet& set,
                                            double error_bound, const SolverOptions& opts = {});

struct TradeoffCurve {
    // (gamma_budget, diamond error), sorted by budget; piecewise-linear
    // interpolation between samples.
    std::vector<std::pair<double, double>> samples;
};

// Geometric grid of n_points budgets covering [1, gamma_opt] with one extra
// point at 1.05 * gamma_opt.
std::vector<double> default_budget_grid(double gamma_opt, int n_points = 21);

// One approximate_qpd solve per budget; grid points fan out to parallel
// workers. A monotonicity violation above 1e-6 aborts.
TradeoffCurve tradeoff_curve(const ChoiMatrix& target, const ChannelSet& set,
                             const std::vector<double>& budgets,
                             const ApproxQpdOptions& base_options = {},
                             const Parallelism& par = Parallelism::serial(),
                             const SolverOptions& opts = {});

}  // namespace qpd
