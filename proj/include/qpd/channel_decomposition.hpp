#pragma once

#include <cstdint>
#include <vector>

#include "qpd/conic.hpp"
#include "qpd/parallel.hpp"

namespace qpd {

// Signed decomposition target = sum_i a_i^+ G_i^+ - sum_i a_i^- G_i^- into
// weighted TPCP channels.
struct ChannelDecompositionItem {
    double weight = 0.0;  // a_i >= 0
    bool positive = true;
    ChoiMatrix choi;      // normalized channel; zero matrix when weight ~ 0
};

struct ChannelDecomposition {
    std::vector<ChannelDecompositionItem> items;
    double gamma = 0.0;          // sum of weights
    double residual_fro = 0.0;   // || recombination - target ||_F

    ChoiMatrix recombined(const ChoiMatrix& like) const;
};

// Optimal two-channel split: minimizes a+ + a- subject to
// target = L+ - L-, L+- PSD, tr_out[L+-] = a+- (1/2^n) I. The target must be
// Hermitian with output marginal proportional to the identity (this covers
// trace-preserving maps and signed combinations of them).
ChannelDecomposition two_channel_decomposition(const ChoiMatrix& target,
                                               const SolverOptions& opts = {});

struct BMConfig {
    int rank = 2;
    int n_pos = -1;  // default: 4^n / 2 (2 for one qubit, 8 for two)
    int n_neg = -1;
    double epsilon = 0.2;    // allowed gamma slack above f*
    int restarts = 5;
    int max_iterations = 4000;
    std::uint64_t seed = 1;
    Parallelism par = Parallelism::serial();

    int resolved_n_pos(int n_qubits) const { return n_pos > 0 ? n_pos : (1 << (2 * n_qubits)) / 2; }
    int resolved_n_neg(int n_qubits) const { return n_neg > 0 ? n_neg : (1 << (2 * n_qubits)) / 2; }
    void validate() const;
};

// Burer-Monteiro factors: item j's (scaled) Choi matrix is X_j^dag X_j with
// X_j of shape rank x 4^n, so PSD and rank <= r hold by construction. The
// item weight is a_j = tr(X_j^dag X_j).
struct BMFactors {
    std::vector<ComplexMatrix> pos;
    std::vector<ComplexMatrix> neg;
};

// Spectral-pairing initial guess: eigenvectors of the two-channel parts,
// sorted by nonincreasing eigenvalue and grouped rank-at-a-time, so that the
// reconstruction equality and gamma = f* hold exactly at the start.
BMFactors bm_initialize(const ChoiMatrix& target, const ChannelDecomposition& two_channel,
                        const BMConfig& cfg);

struct RankConstrainedResult {
    ChannelDecomposition decomposition;
    double objective = 0.0;  // reconstruction + marginal residuals, normalized scale
    bool success = false;    // objective below the success threshold
    int best_restart = -1;
    int iterations = 0;
};

// Rank-constrained decomposition via local optimization of the factor
// matrices: minimizes the reconstruction and trace-preservation residuals
// subject to f_star <= gamma <= (1 + epsilon) f_star. f_star defaults to the
// two-channel gamma.
RankConstrainedResult rank_constrained_decomposition(const ChoiMatrix& target, const BMConfig& cfg,
                                                     double f_star,
                                                     const SolverOptions& opts = {});
RankConstrainedResult rank_constrained_decomposition(const ChoiMatrix& target, const BMConfig& cfg,
                                                     const ChannelDecomposition& two_channel);

// Objective and analytic gradient of the factor optimization at the given
// factors; exposed for verification against finite differences.
double bm_objective(const ChoiMatrix& target, const BMFactors& f);
void bm_gradient(const ChoiMatrix& target, const BMFactors& f, BMFactors& grad);

}  // namespace qpd
