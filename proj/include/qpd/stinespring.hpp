#pragma once

#include <string>
#include <vector>

#include "qpd/channel_decomposition.hpp"
#include "qpd/qpd_core.hpp"
#include "qpd/variational.hpp"

namespace qpd {

struct DecompositionSetEntry {
    std::string label;
    int source_iteration = 0;  // 0 = the noisy target itself
    Circuit circuit;
    ChoiMatrix realized;
};

struct IterationRecord {
    int iteration = 0;
    double delta = 0.0;           // diamond error of the iteration's approximate QPD
    double gamma = 0.0;           // gamma of that QPD
    ChoiMatrix residual;          // the residual map the next iteration decomposes
    double residual_trace = 0.0;
    double residual_marginal_dev = 0.0;
    double bm_objective = 0.0;
    int channels_added = 0;
};

struct StinespringConfig {
    double delta_threshold = 1e-7;
    int max_iterations = 15;
    int rank = 2;
    int variational_depth = 6;
    BMConfig bm;
    FitOptions fit;
    SolverOptions solver;
    Parallelism par = Parallelism::serial();
};

struct StinespringResult {
    bool converged = false;
    std::vector<DecompositionSetEntry> set;
    std::vector<IterationRecord> trace;
    QuasiprobabilityDecomposition final_qpd;  // minimal-gamma QPD over the final set
};

// Iterative decomposition-set construction: start from the noisy realization
// of the target, repeatedly decompose the remaining error into rank-bounded
// channels, realize them through dilation + variational fitting + the noise
// oracle, and re-optimize the quasiprobability coefficients.
StinespringResult run_stinespring(const Circuit& target, const NoiseOracle& oracle,
                                  const StinespringConfig& cfg);

// delta = target - sum_i a_i Choi_i with signed coefficients as stored.
ChoiMatrix residual_delta(const ChoiMatrix& target, const QuasiprobabilityDecomposition& qpd);

// Ideal unitary channel of a postselection-free circuit.
ChoiMatrix ideal_circuit_choi(const Circuit& c);

}  // namespace qpd
